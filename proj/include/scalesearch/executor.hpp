#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scalesearch/errors.hpp"
#include "scalesearch/image.hpp"

namespace scalesearch {

enum class OpKind { overlay, crop, annotate, draw_line, downscale, fail, external };

std::string op_kind_name(OpKind kind);
OpKind op_kind_from_name(const std::string& name);

// A visual operation attached to a reasoning step. Built-in kinds carry
// numeric args; kind == external carries the code to hand to the adapter.
struct VisualOp {
    OpKind kind = OpKind::annotate;
    std::map<std::string, double> args;
    std::string source_code;  // external only

    bool operator==(const VisualOp&) const = default;

    static VisualOp crop(int row0, int col0, int rows, int cols);
    static VisualOp overlay();
    static VisualOp annotate(int row, int col, int value);
    static VisualOp draw_line(int r0, int c0, int r1, int c1);
    static VisualOp downscale(double alpha);
    static VisualOp fail();
    static VisualOp external(std::string source_code);
};

// Configuration for the external-command adapter: the command is spawned per
// call, fed one JSON request on stdin and expected to print one JSON response.
struct ExecutorConfig {
    std::vector<std::string> command;  // argv; empty = adapter unavailable
    int timeout_ms = 30000;
};

// Pooled shrink by factor alpha in (0, 1]. Output is
// floor(alpha*rows) x floor(alpha*cols); each output cell is the mean of its
// source block, rounded half up. alpha == 1 is the identity.
ToyImage downscale(const ToyImage& image, double alpha);

// Spawns config.command, writes {"source_code", "images": [...]} to stdin and
// reads {"images": [...]} from stdout. Throws ExecutionError on nonzero exit,
// malformed output, or timeout.
std::vector<ToyImage> run_external(const VisualOp& op, const std::vector<ToyImage>& images,
                                   const ExecutorConfig& config);

// Applies visual operations to images and returns only the newly produced
// images; callers union them with their running image set. Built-in kinds are
// pure and never mutate inputs. Failures throw ExecutionError; the sampling
// loop records them on the step instead of letting them escape.
class Executor {
public:
    Executor() = default;
    explicit Executor(ExecutorConfig config) : config_(std::move(config)) {}

    std::vector<ToyImage> execute(const VisualOp& op, const std::vector<ToyImage>& images) const;

    const ExecutorConfig& config() const { return config_; }

private:
    ExecutorConfig config_;
};

}  // namespace scalesearch
