#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scalesearch/core.hpp"
#include "scalesearch/policy.hpp"
#include "scalesearch/verifier.hpp"

namespace scalesearch {

enum class StrategyKind { self_consistency, best_of_n, beam_search, mcts, hybrid_vote };

std::string strategy_kind_name(StrategyKind kind);
StrategyKind strategy_kind_from_name(const std::string& name);

struct StrategyConfig {
    StrategyKind kind = StrategyKind::self_consistency;
    int n_samples = 5;      // N
    int beam_width = 4;     // B
    int expansion = 4;      // per-node expansion for beam / MCTS
    double w = 1.4;         // UCB exploration weight
    int max_iterations = 30;
    int max_depth = 16;     // beam search depth cap
    int n_v = 5;
    std::optional<long long> token_budget;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

struct PoolEntry {
    std::optional<std::string> answer;
    std::optional<double> score;
    int chain_index = -1;  // index into StrategyOutcome::chains
};

struct StrategyOutcome {
    std::optional<Chain> selected_chain;
    std::optional<std::string> selected_answer;
    std::vector<PoolEntry> pool;   // in the strategy's ranking order
    std::vector<Chain> chains;     // every finished candidate considered
    long long tokens_total = 0;
    long long policy_calls = 0;
    long long verifier_calls = 0;
};

// MCTS tree node. value_sum accumulates verifier scores (each in [0, 1]), so
// value_sum <= visit_count always holds after backpropagation.
struct SearchNode {
    Chain prefix;                // root holds an empty chain
    int parent = -1;
    std::vector<int> children;   // in creation order
    long long visit_count = 0;   // C
    double value_sum = 0.0;      // V
    bool terminal = false;       // cannot be extended further
    int depth = 0;
    int creation_index = 0;
    int eval_count = 0;          // evaluation ordinal for trial keying

    const ThoughtStep* step() const { return prefix.steps.empty() ? nullptr : &prefix.steps.back(); }
    bool finished() const { return prefix.finished; }
    double mean_value() const { return visit_count == 0 ? 0.0 : value_sum / visit_count; }
};

struct MctsTree {
    std::vector<SearchNode> nodes;  // nodes[0] is the root
};

class MctsObserver {
public:
    virtual ~MctsObserver() = default;
    virtual void after_iteration(const MctsTree& tree, int iteration) = 0;
};

// Upper Confidence Bound: V/C + w * sqrt(ln(parent C) / C). Unvisited nodes
// return +infinity to force a first visit.
double ucb(const SearchNode& node, long long parent_visits, double w);

// Majority voting over the answers of N sampled chains. Ties break toward
// the answer whose earliest supporting chain has the lowest sample index.
StrategyOutcome self_consistency(const Problem& problem, ChainSampler& sampler,
                                 const StrategyConfig& config);

// Samples N chains, scores each finished one once, picks the argmax.
StrategyOutcome best_of_n(const Problem& problem, ChainSampler& sampler, ChainScorer& scorer,
                          const StrategyConfig& config);

// Iterative score-prune-extend over step prefixes; selects the highest
// scoring finished chain across all iterations.
StrategyOutcome beam_search(const Problem& problem, ChainSampler& sampler, ChainScorer& scorer,
                            const StrategyConfig& config);

// Selection / expansion / evaluation / backpropagation; final selection is
// the finished terminal node with the highest mean value.
StrategyOutcome mcts(const Problem& problem, ChainSampler& sampler, ChainScorer& scorer,
                     const StrategyConfig& config, MctsObserver* observer = nullptr);

// floor(N/2) text-only + ceil(N/2) multi-modal chains, voted together.
// Text chains occupy the lower sample indices for tie-breaking.
StrategyOutcome hybrid_vote(const Problem& problem, ChainSampler& text_sampler,
                            ChainSampler& mm_sampler, const StrategyConfig& config);

}  // namespace scalesearch
