#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scalesearch/errors.hpp"
#include "scalesearch/executor.hpp"
#include "scalesearch/image.hpp"

namespace scalesearch {

inline constexpr std::string_view kAnswerMarker = "Final Answer:";

enum class ImageSource { inline_matrix, file_path, encoded };

// Reference to an image carried by a problem or produced by a step. Inline
// matrices hold the pixels directly; file refs point at a toy-image JSON
// file; encoded refs carry an opaque base64 payload for remote transport.
struct ImageRef {
    std::string handle;
    ImageSource source = ImageSource::inline_matrix;
    std::optional<ToyImage> matrix;  // inline_matrix
    std::string path;                // file_path
    std::string payload;             // encoded
    long long token_cost = 0;
    int origin_step = -1;  // -1 = problem input, otherwise the producing step index

    static ImageRef inline_image(std::string handle, ToyImage image, long long token_cost = 0,
                                 int origin_step = -1);
    static ImageRef file(std::string handle, std::string path);
};

// Returns the pixel matrix behind a ref when one is available: the inline
// matrix, or the parsed file for a file ref. Encoded refs yield nullopt.
std::optional<ToyImage> image_matrix(const ImageRef& ref);

struct Problem {
    std::string id;
    std::string question;
    std::vector<ImageRef> images;
    std::optional<std::string> gold_answer;  // stored pre-normalized
    std::optional<std::vector<std::string>> answer_choices;
    std::string domain_tag;
};

enum class Modality { text_only, multi_modal };

struct ThoughtStep {
    std::string text;
    std::optional<VisualOp> op;
    std::vector<ImageRef> produced_images;
    std::optional<std::string> exec_error;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    Modality modality = Modality::text_only;

    // prompt + completion + produced image costs
    long long token_cost() const;
};

struct Provenance {
    std::string strategy;
    int sample_index = 0;
    std::uint64_t seed = 0;
};

struct Chain {
    std::string problem_id;
    std::vector<ThoughtStep> steps;
    bool finished = false;
    std::optional<std::string> answer;
    bool truncated = false;
    Provenance provenance;
};

// Trim, case-fold, strip trailing punctuation; canonicalize pure numerics
// (no leading '+', no trailing zeros after the decimal point). Throws
// EmptyAnswer when nothing remains.
std::string normalize_answer(const std::string& raw);

// Normalized text following the LAST occurrence of marker in the final
// step's text; nullopt when the marker is absent or nothing usable follows.
std::optional<std::string> extract_answer(const Chain& chain,
                                          std::string_view marker = kAnswerMarker);

long long chain_tokens(const Chain& chain);

// Stable content hash over problem id, steps, finished state and answer.
// Pure function of the chain's content, identical across runs and platforms.
std::uint64_t chain_content_hash(const Chain& chain);

// Throws std::logic_error when a structural invariant is violated
// (answer <=> finished, produced-image / exec-error exclusivity, ...).
void validate_chain(const Chain& chain);

}  // namespace scalesearch
