#include "scalesearch/executor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace scalesearch {

std::string op_kind_name(OpKind kind) {
    switch (kind) {
        case OpKind::overlay: return "overlay";
        case OpKind::crop: return "crop";
        case OpKind::annotate: return "annotate";
        case OpKind::draw_line: return "draw_line";
        case OpKind::downscale: return "downscale";
        case OpKind::fail: return "fail";
        case OpKind::external: return "external";
    }
    return "unknown";
}

OpKind op_kind_from_name(const std::string& name) {
    if (name == "overlay") return OpKind::overlay;
    if (name == "crop") return OpKind::crop;
    if (name == "annotate") return OpKind::annotate;
    if (name == "draw_line") return OpKind::draw_line;
    if (name == "downscale") return OpKind::downscale;
    if (name == "fail") return OpKind::fail;
    if (name == "external") return OpKind::external;
    throw ExecutionError("unknown op kind: " + name);
}

VisualOp VisualOp::crop(int row0, int col0, int rows, int cols) {
    VisualOp op;
    op.kind = OpKind::crop;
    op.args = {{"row0", double(row0)}, {"col0", double(col0)},
               {"rows", double(rows)}, {"cols", double(cols)}};
    return op;
}

VisualOp VisualOp::overlay() {
    VisualOp op;
    op.kind = OpKind::overlay;
    return op;
}

VisualOp VisualOp::annotate(int row, int col, int value) {
    VisualOp op;
    op.kind = OpKind::annotate;
    op.args = {{"row", double(row)}, {"col", double(col)}, {"value", double(value)}};
    return op;
}

VisualOp VisualOp::draw_line(int r0, int c0, int r1, int c1) {
    VisualOp op;
    op.kind = OpKind::draw_line;
    op.args = {{"r0", double(r0)}, {"c0", double(c0)}, {"r1", double(r1)}, {"c1", double(c1)}};
    return op;
}

VisualOp VisualOp::downscale(double alpha) {
    VisualOp op;
    op.kind = OpKind::downscale;
    op.args = {{"alpha", alpha}};
    return op;
}

VisualOp VisualOp::fail() {
    VisualOp op;
    op.kind = OpKind::fail;
    return op;
}

VisualOp VisualOp::external(std::string source_code) {
    VisualOp op;
    op.kind = OpKind::external;
    op.source_code = std::move(source_code);
    return op;
}

ToyImage downscale(const ToyImage& image, double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0) throw InvalidAlpha("alpha must lie in (0, 1]");
    int out_rows = static_cast<int>(std::floor(alpha * image.rows));
    int out_cols = static_cast<int>(std::floor(alpha * image.cols));
    if (out_rows < 1 || out_cols < 1) throw InvalidAlpha("downscaled image would be empty");

    ToyImage out = ToyImage::filled(out_rows, out_cols, 0);
    for (int r = 0; r < out_rows; ++r) {
        // Adaptive block boundaries cover every source cell exactly once.
        int r_begin = r * image.rows / out_rows;
        int r_end = (r + 1) * image.rows / out_rows;
        for (int c = 0; c < out_cols; ++c) {
            int c_begin = c * image.cols / out_cols;
            int c_end = (c + 1) * image.cols / out_cols;
            long long sum = 0;
            long long count = 0;
            for (int i = r_begin; i < r_end; ++i)
                for (int j = c_begin; j < c_end; ++j) {
                    sum += image.at(i, j);
                    ++count;
                }
            // Mean rounded half up, in integer arithmetic.
            out.at(r, c) = static_cast<int>((2 * sum + count) / (2 * count));
        }
    }
    return out;
}

namespace {

double arg_or_throw(const VisualOp& op, const std::string& key) {
    auto it = op.args.find(key);
    if (it == op.args.end())
        throw ExecutionError(op_kind_name(op.kind) + " is missing arg \"" + key + "\"");
    return it->second;
}

int int_arg(const VisualOp& op, const std::string& key) {
    return static_cast<int>(std::llround(arg_or_throw(op, key)));
}

const ToyImage& first_image(const std::vector<ToyImage>& images, const VisualOp& op) {
    if (images.empty())
        throw ExecutionError(op_kind_name(op.kind) + " requires at least one image");
    return images.front();
}

int clamp_cell(int v) { return std::clamp(v, 0, 255); }

}  // namespace

std::vector<ToyImage> Executor::execute(const VisualOp& op,
                                        const std::vector<ToyImage>& images) const {
    switch (op.kind) {
        case OpKind::overlay: {
            if (images.size() < 2) throw ExecutionError("overlay requires two images");
            const ToyImage& a = images[0];
            const ToyImage& b = images[1];
            if (a.rows != b.rows || a.cols != b.cols)
                throw ExecutionError("overlay shape mismatch");
            ToyImage out = a;
            for (std::size_t i = 0; i < out.cells.size(); ++i)
                out.cells[i] = std::max(a.cells[i], b.cells[i]);
            return {out};
        }
        case OpKind::crop: {
            const ToyImage& src = first_image(images, op);
            int row0 = int_arg(op, "row0"), col0 = int_arg(op, "col0");
            int rows = int_arg(op, "rows"), cols = int_arg(op, "cols");
            if (row0 < 0 || col0 < 0 || rows < 1 || cols < 1 || row0 + rows > src.rows ||
                col0 + cols > src.cols)
                throw ExecutionError("crop region out of bounds");
            ToyImage out = ToyImage::filled(rows, cols, 0);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) out.at(r, c) = src.at(row0 + r, col0 + c);
            return {out};
        }
        case OpKind::annotate: {
            int row = int_arg(op, "row"), col = int_arg(op, "col");
            int value = clamp_cell(int_arg(op, "value"));
            if (images.empty()) {
                if (row != 0 || col != 0) throw ExecutionError("annotate cell out of bounds");
                return {ToyImage::filled(1, 1, value)};
            }
            ToyImage out = images.front();
            if (row < 0 || col < 0 || row >= out.rows || col >= out.cols)
                throw ExecutionError("annotate cell out of bounds");
            out.at(row, col) = value;
            return {out};
        }
        case OpKind::draw_line: {
            ToyImage out = first_image(images, op);
            int r0 = int_arg(op, "r0"), c0 = int_arg(op, "c0");
            int r1 = int_arg(op, "r1"), c1 = int_arg(op, "c1");
            auto in_bounds = [&](int r, int c) {
                return r >= 0 && c >= 0 && r < out.rows && c < out.cols;
            };
            if (!in_bounds(r0, c0) || !in_bounds(r1, c1))
                throw ExecutionError("draw_line endpoint out of bounds");
            // Bresenham over the discrete segment (x = column, y = row).
            int dx = std::abs(c1 - c0), dy = std::abs(r1 - r0);
            int sx = c0 < c1 ? 1 : -1, sy = r0 < r1 ? 1 : -1;
            int err = (dx > dy ? dx : -dy) / 2;
            int r = r0, c = c0;
            while (true) {
                out.at(r, c) = 255;
                if (r == r1 && c == c1) break;
                int e2 = err;
                if (e2 > -dx) { err -= dy; c += sx; }
                if (e2 < dy) { err += dx; r += sy; }
            }
            return {out};
        }
        case OpKind::downscale: {
            const ToyImage& src = first_image(images, op);
            try {
                return {downscale(src, arg_or_throw(op, "alpha"))};
            } catch (const InvalidAlpha& e) {
                throw ExecutionError(e.what());
            }
        }
        case OpKind::fail:
            throw ExecutionError("injected failure");
        case OpKind::external: {
            if (config_.command.empty())
                throw ExecutionError("external adapter is not configured");
            return run_external(op, images, config_);
        }
    }
    throw ExecutionError("unknown op kind");
}

}  // namespace scalesearch
