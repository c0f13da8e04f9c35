#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scalesearch/core.hpp"
#include "scalesearch/executor.hpp"
#include "scalesearch/rng.hpp"

namespace scalesearch {

enum class BackendKind { remote, simulated };

struct PolicyConfig {
    BackendKind backend = BackendKind::simulated;
    double temperature = 1.0;
    Modality modality = Modality::text_only;
    std::string step_stop_marker = "\n\n";
    std::string answer_marker = std::string(kAnswerMarker);
    int max_steps = 8;
    std::optional<long long> token_budget;

    void validate() const;  // throws ConfigError
};

// Closed-form description of the simulated policy. Chains decide their final
// answer at the terminal step, so per-chain correctness is exactly
// Bernoulli(p_correct); chain length is uniform on [steps_min, steps_max].
struct SimPolicySpec {
    std::vector<std::string> alphabet = {"a", "b", "c", "d"};
    std::string correct_answer = "a";
    double p_correct = 0.6;
    int steps_min = 3;
    int steps_max = 3;
    long long text_tokens_per_step = 20;
    double image_prob = 0.5;       // chance a multi-modal step carries an op
    long long image_token_cost = 85;
    double q1 = 0.8;               // P(trial says "correct" | answer correct)
    double q0 = 0.3;               // P(trial says "correct" | answer incorrect)
    double fail_prob = 0.0;        // chance a carried op is an injected failure
    double alpha = 1.0;            // resolution factor for produced images

    void validate() const;  // throws ConfigError
};

// Identifies one step-sampling call. stream_key fully determines the step's
// random stream; sample_index is the chain index for sampling strategies and
// the creation ordinal for tree strategies; branch_index is the ordinal among
// siblings expanded from the same prefix.
struct StepContext {
    std::uint64_t stream_key = 0;
    int sample_index = 0;
    int step_index = 0;
    int branch_index = 0;
};

// A generative policy sampled one step at a time. Implementations must be
// safe for concurrent sampling calls; all randomness comes from the context's
// stream key, never from internal mutable state.
class PolicyBackend {
public:
    virtual ~PolicyBackend() = default;

    // One new step conditioned on (question, images, steps so far). The step
    // is returned without produced_images; the sampling loop executes any
    // carried op and attaches the results.
    virtual ThoughtStep sample_step(const Problem& problem, const Chain& prefix,
                                    const StepContext& ctx) = 0;

    // Token cost charged for one produced image.
    virtual long long image_token_cost(const ToyImage& image) const = 0;
};

class SimulatedPolicy final : public PolicyBackend {
public:
    SimulatedPolicy(SimPolicySpec spec, PolicyConfig config);

    ThoughtStep sample_step(const Problem& problem, const Chain& prefix,
                            const StepContext& ctx) override;
    long long image_token_cost(const ToyImage&) const override { return spec_.image_token_cost; }

    const SimPolicySpec& spec() const { return spec_; }
    const PolicyConfig& config() const { return config_; }

private:
    SimPolicySpec spec_;
    PolicyConfig config_;
};

struct SampleStats {
    long long policy_calls = 0;
    long long tokens = 0;
};

// Drives a PolicyBackend step by step: executes carried ops, records
// execution errors on the step, extracts answers at the marker and enforces
// the token-budget rule (stop after the step that crosses the budget).
// Sample index i draws from a stream derived from (seed, i) only, so chain
// sets are identical whether sampled sequentially or in parallel.
class ChainSampler {
public:
    ChainSampler(PolicyBackend& backend, const Executor& executor, PolicyConfig config,
                 std::uint64_t seed, std::string strategy_name);

    // Full chain for the given sample index.
    Chain sample_chain(const Problem& problem, int sample_index);

    // Extend a prefix by exactly one sampled step (tree strategies).
    // creation_ordinal keys the step's random stream; branch_index is its
    // ordinal among siblings.
    Chain extend(const Problem& problem, const Chain& prefix, int creation_ordinal,
                 int branch_index);

    const PolicyConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    const SampleStats& stats() const { return stats_; }

private:
    Chain append_sampled_step(const Problem& problem, Chain chain, const StepContext& ctx);

    PolicyBackend& backend_;
    const Executor& executor_;
    PolicyConfig config_;
    std::uint64_t seed_;
    std::string strategy_name_;
    SampleStats stats_;
};

// All images visible to a step: problem inputs first, then images produced by
// earlier steps in order.
std::vector<ToyImage> gather_images(const Problem& problem, const Chain& prefix);

// Convenience wrapper for single-chain use.
Chain sample_chain(const Problem& problem, PolicyBackend& backend, const Executor& executor,
                   const PolicyConfig& config, std::uint64_t seed, int sample_index = 0,
                   const std::string& strategy_name = "");

}  // namespace scalesearch
