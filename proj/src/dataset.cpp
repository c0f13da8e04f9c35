#include "scalesearch/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

#include "scalesearch/errors.hpp"

namespace scalesearch {

std::vector<Problem> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset: " + path.string());
    const std::filesystem::path base = path.parent_path();

    std::vector<Problem> problems;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_number, e.what());
        }
        if (!j.is_object()) throw ParseError(line_number, "expected a JSON object");

        Problem problem;
        try {
            problem.id = j.at("id").get<std::string>();
            problem.question = j.at("question").get<std::string>();
            problem.domain_tag = j.value("domain", "");

            if (j.contains("images")) {
                for (const auto& entry : j.at("images")) {
                    const std::string rel = entry.get<std::string>();
                    const std::filesystem::path resolved = base / rel;
                    if (!std::filesystem::exists(resolved))
                        throw ParseError(line_number, "image file not found: " + rel);
                    problem.images.push_back(ImageRef::file(rel, resolved.string()));
                }
            }
            if (j.contains("choices")) {
                std::vector<std::string> choices;
                for (const auto& entry : j.at("choices"))
                    choices.push_back(normalize_answer(entry.get<std::string>()));
                problem.answer_choices = std::move(choices);
            }
            if (j.contains("answer")) {
                problem.gold_answer = normalize_answer(j.at("answer").get<std::string>());
                if (problem.answer_choices) {
                    const auto& choices = *problem.answer_choices;
                    if (std::find(choices.begin(), choices.end(), *problem.gold_answer) ==
                        choices.end())
                        throw ParseError(line_number, "answer is not among choices");
                }
            }
        } catch (const ParseError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_number, e.what());
        } catch (const EmptyAnswer& e) {
            throw ParseError(line_number, e.what());
        }

        if (!seen_ids.insert(problem.id).second) throw DuplicateId(line_number, problem.id);
        problems.push_back(std::move(problem));
    }
    return problems;
}

}  // namespace scalesearch
