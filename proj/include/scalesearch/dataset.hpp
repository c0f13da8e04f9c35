#pragma once

#include <filesystem>
#include <vector>

#include "scalesearch/core.hpp"

namespace scalesearch {

// JSON Lines, one problem per line:
//   {"id", "question", "images": [paths], "answer"?, "choices"?}
// Gold answers and choices are normalized at load; image paths are resolved
// relative to the dataset file and must exist. Throws ParseError with the
// offending line number, or DuplicateId.
std::vector<Problem> load_dataset(const std::filesystem::path& path);

}  // namespace scalesearch
