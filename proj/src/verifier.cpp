#include "scalesearch/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>

namespace scalesearch {

const std::string kClassificationInstruction =
    "Verify the reasoning process above and provide the final judgment of 'yes' or 'no' on "
    "whether the reasoning is valid at last after “Final Decision:”.";
const std::string kRegressionInstruction =
    "Verify the reasoning process above and provide a validation score from 0 (worst) to 1.0 "
    "(best) at last after “Final Score:”.";

namespace {

std::string lowered(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Position just past the last case-insensitive occurrence of marker, or npos.
std::size_t after_last_marker(std::string_view response, std::string_view marker) {
    const std::string hay = lowered(response);
    const std::string needle = lowered(marker);
    const std::size_t pos = hay.rfind(needle);
    if (pos == std::string::npos) return std::string::npos;
    return pos + needle.size();
}

}  // namespace

Decision parse_decision(std::string_view response) {
    const std::size_t from = after_last_marker(response, "Final Decision:");
    if (from == std::string::npos) return Decision::parse_failure;

    std::size_t i = from;
    while (i < response.size() && std::isspace(static_cast<unsigned char>(response[i]))) ++i;
    std::size_t j = i;
    while (j < response.size() && !std::isspace(static_cast<unsigned char>(response[j]))) ++j;

    std::string word = lowered(response.substr(i, j - i));
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.pop_back();
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front())))
        word.erase(word.begin());

    if (word == "yes") return Decision::positive;
    if (word == "no") return Decision::negative;
    return Decision::parse_failure;
}

std::optional<double> parse_score(std::string_view response) {
    const std::size_t from = after_last_marker(response, "Final Score:");
    if (from == std::string::npos) return std::nullopt;

    // First decimal after the marker; overflow clamps like any other value.
    const std::size_t n = response.size();
    auto digit_at = [&](std::size_t i) {
        return i < n && std::isdigit(static_cast<unsigned char>(response[i])) != 0;
    };
    for (std::size_t i = from; i < n; ++i) {
        const char c = response[i];
        bool starts_number = digit_at(i);
        if (!starts_number && (c == '+' || c == '-'))
            starts_number = digit_at(i + 1) || (i + 1 < n && response[i + 1] == '.' && digit_at(i + 2));
        if (!starts_number && c == '.') starts_number = digit_at(i + 1);
        if (!starts_number) continue;

        const std::string tail(response.substr(i));
        char* end = nullptr;
        const double value = std::strtod(tail.c_str(), &end);
        if (end == tail.c_str()) continue;
        return std::clamp(value, 0.0, 1.0);
    }
    return std::nullopt;
}

std::string verifier_mode_name(VerifierMode mode) {
    switch (mode) {
        case VerifierMode::classification: return "classification";
        case VerifierMode::regression: return "regression";
        case VerifierMode::consistency: return "consistency";
    }
    return "unknown";
}

VerifierMode verifier_mode_from_name(const std::string& name) {
    if (name == "classification") return VerifierMode::classification;
    if (name == "regression") return VerifierMode::regression;
    if (name == "consistency") return VerifierMode::consistency;
    throw ConfigError("unknown verifier mode: " + name);
}

VerifierPrompt default_prompt(VerifierMode mode) {
    VerifierPrompt prompt;
    prompt.mode = mode == VerifierMode::regression ? VerifierMode::regression
                                                   : VerifierMode::classification;
    prompt.instruction = prompt.mode == VerifierMode::regression ? kRegressionInstruction
                                                                 : kClassificationInstruction;
    return prompt;
}

bool sim_verify_trial(const Chain& chain, const SimPolicySpec& spec, RngStream& rng) {
    const bool correct = chain.answer.has_value() && *chain.answer == spec.correct_answer;
    return rng.bernoulli(correct ? spec.q1 : spec.q0);
}

std::string SimVerifierBackend::run_trial(const Problem&, const Chain& prefix,
                                          const VerifierPrompt&, std::uint64_t trial_key) {
    RngStream stream(derive_key(derive_key(seed_, chain_content_hash(prefix)), trial_key));
    return sim_verify_trial(prefix, spec_, stream) ? "Final Decision: yes" : "Final Decision: no";
}

std::string ScriptedVerifierBackend::run_trial(const Problem&, const Chain&,
                                               const VerifierPrompt&, std::uint64_t) {
    const std::size_t i = static_cast<std::size_t>(calls_++);
    if (responses_.empty()) return "";
    return responses_[i % responses_.size()];
}

VerifierReport verify_classification(const Problem& problem, const Chain& prefix,
                                     TrialBackend& backend, std::uint64_t trial_key) {
    const VerifierPrompt prompt = default_prompt(VerifierMode::classification);
    const std::string response = backend.run_trial(problem, prefix, prompt, trial_key);
    const Decision decision = parse_decision(response);

    VerifierReport report;
    report.mode = VerifierMode::classification;
    report.n_v = 1;
    report.raw_responses.push_back(response);
    report.trials.push_back({decision == Decision::positive, decision == Decision::parse_failure});
    report.score = decision == Decision::positive ? 1.0 : 0.0;
    return report;
}

VerifierReport verify_regression(const Problem& problem, const Chain& prefix,
                                 TrialBackend& backend, std::uint64_t trial_key) {
    const VerifierPrompt prompt = default_prompt(VerifierMode::regression);
    VerifierReport report;
    report.mode = VerifierMode::regression;
    report.n_v = 1;

    std::uint64_t key = trial_key;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string response = backend.run_trial(problem, prefix, prompt, key);
        report.raw_responses.push_back(response);
        if (auto score = parse_score(response)) {
            report.trials.push_back({false, false});
            report.score = *score;
            return report;
        }
        report.trials.push_back({false, true});
        key = derive_key(key, 0x11ull);  // one retry on parse failure
    }
    report.score = 0.0;
    return report;
}

VerifierReport verify_consistency(const Problem& problem, const Chain& prefix,
                                  TrialBackend& backend, int n_v, std::uint64_t trial_base) {
    if (n_v < 1) throw ConfigError("n_v must be >= 1");
    const VerifierPrompt prompt = default_prompt(VerifierMode::classification);

    VerifierReport report;
    report.mode = VerifierMode::consistency;
    report.n_v = n_v;
    int positives = 0;
    for (int t = 0; t < n_v; ++t) {
        const std::uint64_t key = derive_key(trial_base, static_cast<std::uint64_t>(t));
        const std::string response = backend.run_trial(problem, prefix, prompt, key);
        const Decision decision = parse_decision(response);
        report.raw_responses.push_back(response);
        report.trials.push_back(
            {decision == Decision::positive, decision == Decision::parse_failure});
        if (decision == Decision::positive) ++positives;
    }
    report.score = static_cast<double>(positives) / static_cast<double>(n_v);
    return report;
}

namespace {

// Routes trials through the scorer's cache; used for all modes so repeated
// scoring of a retained prefix never re-runs a backend trial.
class CachingTrialBackend final : public TrialBackend {
public:
    using Fetch = std::function<std::string(const Problem&, const Chain&, const VerifierPrompt&,
                                            std::uint64_t)>;
    explicit CachingTrialBackend(Fetch fetch) : fetch_(std::move(fetch)) {}

    std::string run_trial(const Problem& problem, const Chain& prefix,
                          const VerifierPrompt& prompt, std::uint64_t trial_key) override {
        return fetch_(problem, prefix, prompt, trial_key);
    }

private:
    Fetch fetch_;
};

}  // namespace

ChainScorer::ChainScorer(VerifierMode mode, int n_v, TrialBackend& backend)
    : mode_(mode), n_v_(n_v), backend_(backend), prompt_(default_prompt(mode)) {
    if (n_v_ < 1) throw ConfigError("n_v must be >= 1");
}

std::string ChainScorer::trial_response(const Problem& problem, const Chain& prefix,
                                        const VerifierPrompt& prompt, std::uint64_t content_hash,
                                        std::uint64_t trial_key) {
    const std::string cache_key = std::to_string(content_hash) + "|" +
                                  verifier_mode_name(prompt.mode) + "|" +
                                  std::to_string(trial_key);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(cache_key);
        if (it != cache_.end()) {
            ++stats_.cache_hits;
            return it->second;
        }
    }
    const std::string response = backend_.run_trial(problem, prefix, prompt, trial_key);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(cache_key, response);
        ++stats_.trials;
    }
    return response;
}

VerifierReport ChainScorer::score(const Problem& problem, const Chain& prefix,
                                  std::uint64_t identity_key, int evaluation_ordinal) {
    const std::uint64_t content_hash = chain_content_hash(prefix);
    const std::uint64_t trial_base = derive_key(derive_key(identity_key, 0xE7A1ull),
                                                static_cast<std::uint64_t>(evaluation_ordinal));

    CachingTrialBackend cached([&](const Problem& p, const Chain& c, const VerifierPrompt& pr,
                                   std::uint64_t key) {
        return trial_response(p, c, pr, content_hash, key);
    });

    VerifierReport report;
    switch (mode_) {
        case VerifierMode::classification:
            report = verify_classification(problem, prefix, cached, trial_base);
            break;
        case VerifierMode::regression:
            report = verify_regression(problem, prefix, cached, trial_base);
            break;
        case VerifierMode::consistency:
            report = verify_consistency(problem, prefix, cached, n_v_, trial_base);
            break;
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.reports;
    }
    return report;
}

}  // namespace scalesearch
