#include "scalesearch/policy.hpp"

#include <algorithm>
#include <unordered_set>

namespace scalesearch {

namespace {

// Domain separation salts so chain streams and tree-extension streams never
// collide for the same seed.
constexpr std::uint64_t kChainDomain = 0xC4A1ull;
constexpr std::uint64_t kTreeDomain = 0x7EE5ull;

}  // namespace

void PolicyConfig::validate() const {
    if (temperature < 0) throw ConfigError("policy.temperature must be nonnegative");
    if (step_stop_marker.empty()) throw ConfigError("policy.step_stop_marker must be nonempty");
    if (answer_marker.empty()) throw ConfigError("policy.answer_marker must be nonempty");
    if (max_steps < 1) throw ConfigError("policy.max_steps must be >= 1");
    if (token_budget && *token_budget < 1) throw ConfigError("policy.token_budget must be >= 1");
}

void SimPolicySpec::validate() const {
    if (alphabet.size() < 2) throw ConfigError("sim.alphabet needs at least 2 answers");
    std::unordered_set<std::string> seen;
    for (const std::string& a : alphabet) {
        if (a.empty()) throw ConfigError("sim.alphabet entries must be nonempty");
        if (!seen.insert(a).second) throw ConfigError("sim.alphabet entries must be unique");
    }
    if (!seen.count(correct_answer))
        throw ConfigError("sim.correct_answer must be a member of sim.alphabet");
    auto prob = [](double p, const char* name) {
        if (p < 0.0 || p > 1.0) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    prob(p_correct, "sim.p_correct");
    prob(image_prob, "sim.image_prob");
    prob(q1, "sim.q1");
    prob(q0, "sim.q0");
    prob(fail_prob, "sim.fail_prob");
    if (steps_min < 1 || steps_max < steps_min)
        throw ConfigError("sim steps must satisfy 1 <= steps_min <= steps_max");
    if (text_tokens_per_step < 1) throw ConfigError("sim.text_tokens_per_step must be >= 1");
    if (image_token_cost < 0) throw ConfigError("sim.image_token_cost must be >= 0");
    if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("sim.alpha must lie in (0, 1]");
}

SimulatedPolicy::SimulatedPolicy(SimPolicySpec spec, PolicyConfig config)
    : spec_(std::move(spec)), config_(std::move(config)) {
    spec_.validate();
    config_.validate();
}

ThoughtStep SimulatedPolicy::sample_step(const Problem& problem, const Chain& prefix,
                                         const StepContext& ctx) {
    RngStream rng(ctx.stream_key);
    const int depth = static_cast<int>(prefix.steps.size());  // index of the new step

    // Terminal with probability 1/(steps_max - depth) once the minimum length
    // is reachable: chain length is exactly uniform on [steps_min, steps_max].
    const double u_term = rng.next_double();
    bool terminal = false;
    if (depth + 1 >= spec_.steps_min) {
        const int remaining = spec_.steps_max - depth;
        terminal = remaining <= 1 || u_term * remaining < 1.0;
    }

    ThoughtStep step;
    step.modality = config_.modality;
    step.completion_tokens = spec_.text_tokens_per_step;
    step.prompt_tokens = 0;

    const double u_answer = rng.next_double();
    if (terminal) {
        // Lower resolution factors pull multi-modal answers toward chance.
        double p_eff = spec_.p_correct;
        if (config_.modality == Modality::multi_modal) {
            const double chance = 1.0 / static_cast<double>(spec_.alphabet.size());
            p_eff = (1.0 - spec_.alpha) * chance + spec_.alpha * spec_.p_correct;
        }
        std::string answer;
        if (u_answer < p_eff) {
            answer = spec_.correct_answer;
        } else {
            const auto wrong = rng.below(spec_.alphabet.size() - 1);
            std::size_t k = 0;
            for (const std::string& a : spec_.alphabet) {
                if (a == spec_.correct_answer) continue;
                if (k == wrong) {
                    answer = a;
                    break;
                }
                ++k;
            }
        }
        step.text = "Concluding after reviewing the evidence. " + config_.answer_marker + " " +
                    answer;
    } else {
        step.text = "Reasoning step " + std::to_string(depth + 1) + " for " + problem.id + ".";
    }

    if (config_.modality == Modality::multi_modal) {
        const double u_op = rng.next_double();
        if (u_op < spec_.image_prob) {
            const double u_fail = rng.next_double();
            if (u_fail < spec_.fail_prob) {
                step.op = VisualOp::fail();
            } else if (!gather_images(problem, prefix).empty()) {
                step.op = VisualOp::downscale(spec_.alpha);
            } else {
                step.op = VisualOp::annotate(0, 0, 255);
            }
        }
    }
    return step;
}

ChainSampler::ChainSampler(PolicyBackend& backend, const Executor& executor, PolicyConfig config,
                           std::uint64_t seed, std::string strategy_name)
    : backend_(backend),
      executor_(executor),
      config_(std::move(config)),
      seed_(seed),
      strategy_name_(std::move(strategy_name)) {
    config_.validate();
}

Chain ChainSampler::append_sampled_step(const Problem& problem, Chain chain,
                                        const StepContext& ctx) {
    if (config_.token_budget && chain_tokens(chain) >= *config_.token_budget)
        throw BudgetExhausted("token budget exhausted before sampling a new step");

    ThoughtStep step = backend_.sample_step(problem, chain, ctx);
    ++stats_.policy_calls;

    const int step_index = static_cast<int>(chain.steps.size());
    if (step.op) {
        try {
            std::vector<ToyImage> produced =
                executor_.execute(*step.op, gather_images(problem, chain));
            for (std::size_t j = 0; j < produced.size(); ++j) {
                std::string handle = problem.id + "/s" + std::to_string(step_index) + "#" +
                                     std::to_string(j);
                const long long cost = backend_.image_token_cost(produced[j]);
                step.produced_images.push_back(ImageRef::inline_image(
                    std::move(handle), std::move(produced[j]), cost, step_index));
            }
        } catch (const ExecutionError& e) {
            step.produced_images.clear();
            step.exec_error = e.what();
        }
    }

    stats_.tokens += step.token_cost();
    chain.steps.push_back(std::move(step));

    // A step whose text yields a usable answer terminalizes the chain.
    if (auto answer = extract_answer(chain, config_.answer_marker)) {
        chain.finished = true;
        chain.answer = std::move(answer);
    }
    if (config_.token_budget && chain_tokens(chain) >= *config_.token_budget)
        chain.truncated = true;
    return chain;
}

Chain ChainSampler::sample_chain(const Problem& problem, int sample_index) {
    Chain chain;
    chain.problem_id = problem.id;
    chain.provenance = {strategy_name_, sample_index, seed_};

    const std::uint64_t chain_key =
        derive_key(derive_key(seed_, kChainDomain), static_cast<std::uint64_t>(sample_index));
    while (!chain.finished && !chain.truncated &&
           static_cast<int>(chain.steps.size()) < config_.max_steps) {
        StepContext ctx;
        ctx.step_index = static_cast<int>(chain.steps.size());
        ctx.sample_index = sample_index;
        ctx.branch_index = 0;
        ctx.stream_key = derive_key(chain_key, static_cast<std::uint64_t>(ctx.step_index));
        chain = append_sampled_step(problem, std::move(chain), ctx);
    }
    return chain;
}

Chain ChainSampler::extend(const Problem& problem, const Chain& prefix, int creation_ordinal,
                           int branch_index) {
    if (prefix.finished) throw std::logic_error("cannot extend a finished chain");
    if (static_cast<int>(prefix.steps.size()) >= config_.max_steps)
        throw std::logic_error("cannot extend past max_steps");

    StepContext ctx;
    ctx.sample_index = creation_ordinal;
    ctx.step_index = static_cast<int>(prefix.steps.size());
    ctx.branch_index = branch_index;
    ctx.stream_key = derive_key(
        derive_key(derive_key(seed_, kTreeDomain), static_cast<std::uint64_t>(creation_ordinal)),
        static_cast<std::uint64_t>(branch_index));

    Chain child = prefix;
    child.provenance = {strategy_name_, creation_ordinal, seed_};
    return append_sampled_step(problem, std::move(child), ctx);
}

std::vector<ToyImage> gather_images(const Problem& problem, const Chain& prefix) {
    std::vector<ToyImage> images;
    for (const ImageRef& ref : problem.images) {
        if (auto img = image_matrix(ref)) images.push_back(std::move(*img));
    }
    for (const ThoughtStep& step : prefix.steps) {
        for (const ImageRef& ref : step.produced_images) {
            if (auto img = image_matrix(ref)) images.push_back(std::move(*img));
        }
    }
    return images;
}

Chain sample_chain(const Problem& problem, PolicyBackend& backend, const Executor& executor,
                   const PolicyConfig& config, std::uint64_t seed, int sample_index,
                   const std::string& strategy_name) {
    ChainSampler sampler(backend, executor, config, seed, strategy_name);
    return sampler.sample_chain(problem, sample_index);
}

}  // namespace scalesearch
