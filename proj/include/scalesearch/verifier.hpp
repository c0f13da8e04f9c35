#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scalesearch/core.hpp"
#include "scalesearch/policy.hpp"
#include "scalesearch/rng.hpp"

namespace scalesearch {

enum class Decision { positive, negative, parse_failure };

// Finds the LAST "Final Decision:" (case-insensitive); the first word after
// it, case-folded and stripped of punctuation, must be yes or no.
Decision parse_decision(std::string_view response);

// First decimal after the LAST "Final Decision:"-style "Final Score:" marker
// (case-insensitive), clamped to [0, 1]. nullopt on parse failure.
std::optional<double> parse_score(std::string_view response);

enum class VerifierMode { classification, regression, consistency };

std::string verifier_mode_name(VerifierMode mode);
VerifierMode verifier_mode_from_name(const std::string& name);

// The two instruction strings shipped as defaults; override via config.
extern const std::string kClassificationInstruction;
extern const std::string kRegressionInstruction;

struct VerifierPrompt {
    VerifierMode mode = VerifierMode::classification;
    std::string instruction;
};

VerifierPrompt default_prompt(VerifierMode mode);

struct VerifierTrial {
    bool positive = false;
    bool parse_failed = false;
};

struct VerifierReport {
    VerifierMode mode = VerifierMode::classification;
    double score = 0.0;  // always in [0, 1]
    std::vector<VerifierTrial> trials;
    std::vector<std::string> raw_responses;
    int n_v = 1;
};

// One verification trial against some judge; returns the raw response text.
// trial_key makes repeated evaluations of the same prefix independent yet
// reproducible. Implementations must be callable concurrently.
class TrialBackend {
public:
    virtual ~TrialBackend() = default;
    virtual std::string run_trial(const Problem& problem, const Chain& prefix,
                                  const VerifierPrompt& prompt, std::uint64_t trial_key) = 0;
};

// One simulated classification trial: true with probability q1 when the
// chain's answer equals spec.correct_answer, else with probability q0.
// Unfinished prefixes count as not-yet-correct (q0).
bool sim_verify_trial(const Chain& chain, const SimPolicySpec& spec, RngStream& rng);

// Judge with closed-form statistics; emits "Final Decision: yes|no" text so
// reports flow through the same parsing path as remote responses. The trial
// stream is derived from (seed, chain content hash, trial_key).
class SimVerifierBackend final : public TrialBackend {
public:
    SimVerifierBackend(SimPolicySpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {}

    std::string run_trial(const Problem& problem, const Chain& prefix,
                          const VerifierPrompt& prompt, std::uint64_t trial_key) override;

private:
    SimPolicySpec spec_;
    std::uint64_t seed_;
};

// Replays scripted responses keyed by trial order; test double.
class ScriptedVerifierBackend final : public TrialBackend {
public:
    explicit ScriptedVerifierBackend(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}

    std::string run_trial(const Problem&, const Chain&, const VerifierPrompt&,
                          std::uint64_t) override;

    long long calls() const { return calls_; }

private:
    std::vector<std::string> responses_;
    long long calls_ = 0;
};

// Single classification trial: positive -> 1, negative -> 0, parse failure
// -> 0 with the failure recorded.
VerifierReport verify_classification(const Problem& problem, const Chain& prefix,
                                     TrialBackend& backend, std::uint64_t trial_key = 0);

// Single regression trial; one retry on parse failure, then score 0.
VerifierReport verify_regression(const Problem& problem, const Chain& prefix,
                                 TrialBackend& backend, std::uint64_t trial_key = 0);

// n_v independent classification trials; score = positives / n_v.
VerifierReport verify_consistency(const Problem& problem, const Chain& prefix,
                                  TrialBackend& backend, int n_v, std::uint64_t trial_base = 0);

struct ScorerStats {
    long long trials = 0;      // backend calls actually made
    long long cache_hits = 0;
    long long reports = 0;
};

// Caching scorer used by the strategies. Trials are cached per
// (prefix content hash, mode, trial key) for the lifetime of one strategy
// run; beam search re-scores retained prefixes for free while MCTS terminal
// re-visits use fresh ordinals and therefore fresh trials. identity_key keeps
// trial streams of content-identical but distinct candidates independent.
class ChainScorer {
public:
    ChainScorer(VerifierMode mode, int n_v, TrialBackend& backend);

    VerifierReport score(const Problem& problem, const Chain& prefix, std::uint64_t identity_key,
                         int evaluation_ordinal = 0);

    VerifierMode mode() const { return mode_; }
    int n_v() const { return n_v_; }
    const ScorerStats& stats() const { return stats_; }

private:
    std::string trial_response(const Problem& problem, const Chain& prefix,
                               const VerifierPrompt& prompt, std::uint64_t content_hash,
                               std::uint64_t trial_key);

    VerifierMode mode_;
    int n_v_;
    TrialBackend& backend_;
    VerifierPrompt prompt_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::string> cache_;
    ScorerStats stats_;
};

}  // namespace scalesearch
