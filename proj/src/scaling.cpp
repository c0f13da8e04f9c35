#include "scalesearch/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace scalesearch {

std::string strategy_kind_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::self_consistency: return "self_consistency";
        case StrategyKind::best_of_n: return "best_of_n";
        case StrategyKind::beam_search: return "beam_search";
        case StrategyKind::mcts: return "mcts";
        case StrategyKind::hybrid_vote: return "hybrid_vote";
    }
    return "unknown";
}

StrategyKind strategy_kind_from_name(const std::string& name) {
    if (name == "self_consistency") return StrategyKind::self_consistency;
    if (name == "best_of_n") return StrategyKind::best_of_n;
    if (name == "beam_search") return StrategyKind::beam_search;
    if (name == "mcts") return StrategyKind::mcts;
    if (name == "hybrid_vote") return StrategyKind::hybrid_vote;
    throw ConfigError("unknown strategy kind: " + name);
}

void StrategyConfig::validate() const {
    if (n_samples < 1) throw ConfigError("strategy.n_samples must be >= 1");
    if (beam_width < 1) throw ConfigError("strategy.beam_width must be >= 1");
    if (expansion < 1) throw ConfigError("strategy.expansion must be >= 1");
    if (w < 0) throw ConfigError("strategy.w must be nonnegative");
    if (max_iterations < 1) throw ConfigError("strategy.max_iterations must be >= 1");
    if (max_depth < 1) throw ConfigError("strategy.max_depth must be >= 1");
    if (n_v < 1) throw ConfigError("strategy.n_v must be >= 1");
    if (token_budget && *token_budget < 1) throw ConfigError("strategy.token_budget must be >= 1");
}

double ucb(const SearchNode& node, long long parent_visits, double w) {
    if (node.visit_count == 0) return std::numeric_limits<double>::infinity();
    const double mean = node.value_sum / static_cast<double>(node.visit_count);
    return mean + w * std::sqrt(std::log(static_cast<double>(parent_visits)) /
                                static_cast<double>(node.visit_count));
}

namespace {

// Identity key for verifier trial streams of the candidate with the given
// creation/sample index; unique per candidate within one strategy run.
std::uint64_t candidate_identity(const StrategyConfig& config, int index) {
    return derive_key(derive_key(config.seed, 0xB0F5ull), static_cast<std::uint64_t>(index));
}

struct VoteResult {
    std::optional<std::string> winner;
    std::optional<int> winner_index;      // sample index of earliest supporter
    std::vector<int> ranked_chain_slots;  // slots into the finished-chain list
    std::map<std::string, int> counts;
};

// Plurality vote over finished chains (slot order = ascending sample index).
// Ties break toward the answer whose earliest supporter has the lowest index.
VoteResult plurality_vote(const std::vector<Chain>& finished) {
    struct Tally {
        int count = 0;
        int first_slot = -1;
    };
    std::map<std::string, Tally> tallies;
    for (std::size_t slot = 0; slot < finished.size(); ++slot) {
        const std::string& answer = *finished[slot].answer;
        Tally& t = tallies[answer];
        ++t.count;
        if (t.first_slot < 0) t.first_slot = static_cast<int>(slot);
    }

    std::vector<std::pair<std::string, Tally>> order(tallies.begin(), tallies.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second.count != b.second.count) return a.second.count > b.second.count;
        return a.second.first_slot < b.second.first_slot;
    });

    VoteResult result;
    for (const auto& [answer, tally] : order) {
        result.counts[answer] = tally.count;
        for (std::size_t slot = 0; slot < finished.size(); ++slot) {
            if (*finished[slot].answer == answer)
                result.ranked_chain_slots.push_back(static_cast<int>(slot));
        }
    }
    if (!order.empty()) {
        result.winner = order.front().first;
        result.winner_index = finished[order.front().second.first_slot].provenance.sample_index;
    }
    return result;
}

StrategyOutcome vote_outcome(std::vector<Chain> finished) {
    if (finished.empty()) throw NoVotes();
    const VoteResult vote = plurality_vote(finished);

    StrategyOutcome outcome;
    outcome.chains = std::move(finished);
    const double total = static_cast<double>(outcome.chains.size());
    for (int slot : vote.ranked_chain_slots) {
        PoolEntry entry;
        entry.answer = outcome.chains[slot].answer;
        entry.score = vote.counts.at(*entry.answer) / total;  // vote share
        entry.chain_index = slot;
        outcome.pool.push_back(entry);
    }
    outcome.selected_answer = vote.winner;
    for (const Chain& chain : outcome.chains) {
        if (chain.provenance.sample_index == *vote.winner_index) {
            outcome.selected_chain = chain;
            break;
        }
    }
    return outcome;
}

}  // namespace

StrategyOutcome self_consistency(const Problem& problem, ChainSampler& sampler,
                                 const StrategyConfig& config) {
    config.validate();
    const SampleStats before = sampler.stats();

    std::vector<Chain> finished;
    for (int i = 0; i < config.n_samples; ++i) {
        Chain chain = sampler.sample_chain(problem, i);
        validate_chain(chain);
        if (chain.finished) finished.push_back(std::move(chain));
    }

    StrategyOutcome outcome = vote_outcome(std::move(finished));
    outcome.policy_calls = sampler.stats().policy_calls - before.policy_calls;
    outcome.tokens_total = sampler.stats().tokens - before.tokens;
    return outcome;
}

StrategyOutcome best_of_n(const Problem& problem, ChainSampler& sampler, ChainScorer& scorer,
                          const StrategyConfig& config) {
    config.validate();
    const SampleStats before = sampler.stats();
    const long long trials_before = scorer.stats().trials;

    struct Scored {
        Chain chain;
        double score;
        int sample_index;
    };
    std::vector<Scored> scored;
    for (int i = 0; i < config.n_samples; ++i) {
        Chain chain = sampler.sample_chain(problem, i);
        validate_chain(chain);
        if (!chain.finished) continue;
        const double score =
            scorer.score(problem, chain, candidate_identity(config, i)).score;
        scored.push_back({std::move(chain), score, i});
    }
    if (scored.empty()) throw NoFinishedChains();

    std::vector<int> order(scored.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scored[a].score != scored[b].score) return scored[a].score > scored[b].score;
        return scored[a].sample_index < scored[b].sample_index;
    });

    StrategyOutcome outcome;
    for (const Scored& s : scored) outcome.chains.push_back(s.chain);
    for (int slot : order)
        outcome.pool.push_back({scored[slot].chain.answer, scored[slot].score, slot});
    outcome.selected_chain = scored[order.front()].chain;
    outcome.selected_answer = outcome.selected_chain->answer;
    outcome.policy_calls = sampler.stats().policy_calls - before.policy_calls;
    outcome.tokens_total = sampler.stats().tokens - before.tokens;
    outcome.verifier_calls = scorer.stats().trials - trials_before;
    return outcome;
}

StrategyOutcome beam_search(const Problem& problem, ChainSampler& sampler, ChainScorer& scorer,
                            const StrategyConfig& config) {
    config.validate();
    const SampleStats before = sampler.stats();
    const long long trials_before = scorer.stats().trials;
    const int max_steps = sampler.config().max_steps;

    struct Candidate {
        Chain chain;
        double score = 0.0;
        int creation_index = 0;
    };

    int creation_counter = 0;
    Chain root;
    root.problem_id = problem.id;
    root.provenance = {"beam_search", 0, config.seed};

    std::vector<Candidate> active;
    for (int j = 0; j < config.expansion; ++j) {
        Candidate c;
        c.creation_index = creation_counter;
        c.chain = sampler.extend(problem, root, creation_counter, j);
        ++creation_counter;
        active.push_back(std::move(c));
    }

    std::vector<Candidate> completed;
    for (int depth = 1;; ++depth) {
        std::vector<Candidate> extendable;
        for (Candidate& c : active) {
            c.score = scorer.score(problem, c.chain,
                                   candidate_identity(config, c.creation_index))
                          .score;
            if (c.chain.finished)
                completed.push_back(std::move(c));
            else if (!c.chain.truncated && static_cast<int>(c.chain.steps.size()) < max_steps)
                extendable.push_back(std::move(c));
            // Unfinished prefixes that cannot be extended are dropped.
        }
        if (extendable.empty() || depth >= config.max_depth) break;

        std::sort(extendable.begin(), extendable.end(), [](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.creation_index < b.creation_index;
        });
        if (static_cast<int>(extendable.size()) > config.beam_width)
            extendable.resize(static_cast<std::size_t>(config.beam_width));

        active.clear();
        for (const Candidate& retained : extendable) {
            for (int j = 0; j < config.expansion; ++j) {
                Candidate child;
                child.creation_index = creation_counter;
                child.chain = sampler.extend(problem, retained.chain, creation_counter, j);
                ++creation_counter;
                active.push_back(std::move(child));
            }
        }
    }
    if (completed.empty()) throw NoFinishedChains();

    std::vector<int> order(completed.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (completed[a].score != completed[b].score) return completed[a].score > completed[b].score;
        return completed[a].creation_index < completed[b].creation_index;
    });

    StrategyOutcome outcome;
    for (const Candidate& c : completed) {
        validate_chain(c.chain);
        outcome.chains.push_back(c.chain);
    }
    for (int slot : order)
        outcome.pool.push_back({completed[slot].chain.answer, completed[slot].score, slot});
    outcome.selected_chain = completed[order.front()].chain;
    outcome.selected_answer = outcome.selected_chain->answer;
    outcome.policy_calls = sampler.stats().policy_calls - before.policy_calls;
    outcome.tokens_total = sampler.stats().tokens - before.tokens;
    outcome.verifier_calls = scorer.stats().trials - trials_before;
    return outcome;
}

StrategyOutcome mcts(const Problem& problem, ChainSampler& sampler, ChainScorer& scorer,
                     const StrategyConfig& config, MctsObserver* observer) {
    config.validate();
    const SampleStats before = sampler.stats();
    const long long trials_before = scorer.stats().trials;
    const int max_steps = sampler.config().max_steps;

    MctsTree tree;
    SearchNode root;
    root.prefix.problem_id = problem.id;
    root.prefix.provenance = {"mcts", 0, config.seed};
    tree.nodes.push_back(std::move(root));

    auto is_terminal = [&](const Chain& prefix) {
        return prefix.finished || prefix.truncated ||
               static_cast<int>(prefix.steps.size()) >= max_steps;
    };

    for (int iteration = 0; iteration < config.max_iterations; ++iteration) {
        // Selection: descend by UCB while fully expanded and non-terminal.
        int cur = 0;
        while (!tree.nodes[cur].terminal &&
               static_cast<int>(tree.nodes[cur].children.size()) >= config.expansion) {
            const long long parent_visits = std::max<long long>(1, tree.nodes[cur].visit_count);
            int best_child = -1;
            double best_value = -std::numeric_limits<double>::infinity();
            for (int child : tree.nodes[cur].children) {
                const double value = ucb(tree.nodes[child], parent_visits, config.w);
                if (value > best_value) {
                    best_value = value;
                    best_child = child;
                }
            }
            cur = best_child;
        }

        // Expansion: attach one new child unless the node is terminal.
        int evaluated = cur;
        if (!tree.nodes[cur].terminal) {
            SearchNode child;
            const int creation_index = static_cast<int>(tree.nodes.size());
            child.prefix = sampler.extend(problem, tree.nodes[cur].prefix, creation_index,
                                          static_cast<int>(tree.nodes[cur].children.size()));
            child.parent = cur;
            child.depth = tree.nodes[cur].depth + 1;
            child.creation_index = creation_index;
            child.terminal = is_terminal(child.prefix);
            tree.nodes.push_back(std::move(child));
            tree.nodes[cur].children.push_back(creation_index);
            evaluated = creation_index;
        }

        // Evaluation: fresh trial ordinal per (node, visit).
        SearchNode& node = tree.nodes[evaluated];
        const double score = scorer
                                 .score(problem, node.prefix,
                                        candidate_identity(config, node.creation_index),
                                        node.eval_count)
                                 .score;
        ++node.eval_count;

        // Backpropagation up to the root.
        for (int at = evaluated; at != -1; at = tree.nodes[at].parent) {
            tree.nodes[at].value_sum += score;
            tree.nodes[at].visit_count += 1;
        }

        if (observer) observer->after_iteration(tree, iteration);
    }

    std::vector<int> finished_nodes;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].terminal && tree.nodes[i].finished())
            finished_nodes.push_back(static_cast<int>(i));
    }
    if (finished_nodes.empty()) throw NoFinishedChains();

    std::sort(finished_nodes.begin(), finished_nodes.end(), [&](int a, int b) {
        const SearchNode& na = tree.nodes[a];
        const SearchNode& nb = tree.nodes[b];
        if (na.mean_value() != nb.mean_value()) return na.mean_value() > nb.mean_value();
        if (na.visit_count != nb.visit_count) return na.visit_count > nb.visit_count;
        return na.creation_index < nb.creation_index;
    });

    StrategyOutcome outcome;
    for (std::size_t slot = 0; slot < finished_nodes.size(); ++slot) {
        const SearchNode& node = tree.nodes[finished_nodes[slot]];
        validate_chain(node.prefix);
        outcome.chains.push_back(node.prefix);
        outcome.pool.push_back(
            {node.prefix.answer, node.mean_value(), static_cast<int>(slot)});
    }
    outcome.selected_chain = outcome.chains.front();
    outcome.selected_answer = outcome.selected_chain->answer;
    outcome.policy_calls = sampler.stats().policy_calls - before.policy_calls;
    outcome.tokens_total = sampler.stats().tokens - before.tokens;
    outcome.verifier_calls = scorer.stats().trials - trials_before;
    return outcome;
}

StrategyOutcome hybrid_vote(const Problem& problem, ChainSampler& text_sampler,
                            ChainSampler& mm_sampler, const StrategyConfig& config) {
    config.validate();
    if (config.n_samples < 2) throw ConfigError("hybrid_vote needs n_samples >= 2");
    const SampleStats text_before = text_sampler.stats();
    const SampleStats mm_before = mm_sampler.stats();

    const int n_text = config.n_samples / 2;  // extra odd chain goes multi-modal

    std::vector<Chain> finished;
    for (int i = 0; i < config.n_samples; ++i) {
        ChainSampler& lane = i < n_text ? text_sampler : mm_sampler;
        Chain chain = lane.sample_chain(problem, i);
        validate_chain(chain);
        if (chain.finished) finished.push_back(std::move(chain));
    }

    StrategyOutcome outcome = vote_outcome(std::move(finished));
    outcome.policy_calls = (text_sampler.stats().policy_calls - text_before.policy_calls) +
                           (mm_sampler.stats().policy_calls - mm_before.policy_calls);
    outcome.tokens_total = (text_sampler.stats().tokens - text_before.tokens) +
                           (mm_sampler.stats().tokens - mm_before.tokens);
    return outcome;
}

}  // namespace scalesearch
