#include "scalesearch/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace scalesearch {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

void reject_unknown_keys(const json& j, const std::string& where,
                         const std::set<std::string>& known) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) bad(where, "unknown key \"" + key + "\"");
    }
}

template <typename T>
T get_as(const json& j, const std::string& where, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    if (j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        bad(where, "bad value for \"" + key + "\": " + e.what());
    }
}

std::optional<long long> get_optional_ll(const json& j, const std::string& where,
                                         const std::string& key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    try {
        return j.at(key).get<long long>();
    } catch (const json::exception& e) {
        bad(where, "bad value for \"" + key + "\": " + e.what());
    }
}

Modality modality_from_name(const std::string& name, const std::string& where) {
    if (name == "text_only") return Modality::text_only;
    if (name == "multi_modal") return Modality::multi_modal;
    bad(where, "unknown modality \"" + name + "\"");
}

BackendKind backend_from_name(const std::string& name, const std::string& where) {
    if (name == "simulated") return BackendKind::simulated;
    if (name == "remote") return BackendKind::remote;
    bad(where, "unknown backend \"" + name + "\"");
}

PolicyConfig parse_policy(const json& j) {
    const std::string where = "policy";
    reject_unknown_keys(j, where,
                        {"backend", "temperature", "modality", "step_stop_marker",
                         "answer_marker", "max_steps", "token_budget"});
    PolicyConfig config;
    config.backend = backend_from_name(get_as<std::string>(j, where, "backend", "simulated"),
                                       where);
    config.temperature = get_as<double>(j, where, "temperature", config.temperature);
    config.modality = modality_from_name(get_as<std::string>(j, where, "modality", "text_only"),
                                         where);
    config.step_stop_marker = get_as<std::string>(j, where, "step_stop_marker",
                                                  config.step_stop_marker);
    config.answer_marker = get_as<std::string>(j, where, "answer_marker", config.answer_marker);
    config.max_steps = get_as<int>(j, where, "max_steps", config.max_steps);
    config.token_budget = get_optional_ll(j, where, "token_budget");
    return config;
}

SimPolicySpec parse_sim(const json& j, const std::string& where) {
    reject_unknown_keys(j, where,
                        {"alphabet", "correct_answer", "p_correct", "steps_min", "steps_max",
                         "text_tokens_per_step", "image_prob", "image_token_cost", "q1", "q0",
                         "fail_prob", "alpha"});
    SimPolicySpec spec;
    spec.alphabet = get_as<std::vector<std::string>>(j, where, "alphabet", spec.alphabet);
    spec.correct_answer = get_as<std::string>(j, where, "correct_answer", spec.correct_answer);
    spec.p_correct = get_as<double>(j, where, "p_correct", spec.p_correct);
    spec.steps_min = get_as<int>(j, where, "steps_min", spec.steps_min);
    spec.steps_max = get_as<int>(j, where, "steps_max", spec.steps_max);
    spec.text_tokens_per_step =
        get_as<long long>(j, where, "text_tokens_per_step", spec.text_tokens_per_step);
    spec.image_prob = get_as<double>(j, where, "image_prob", spec.image_prob);
    spec.image_token_cost = get_as<long long>(j, where, "image_token_cost", spec.image_token_cost);
    spec.q1 = get_as<double>(j, where, "q1", spec.q1);
    spec.q0 = get_as<double>(j, where, "q0", spec.q0);
    spec.fail_prob = get_as<double>(j, where, "fail_prob", spec.fail_prob);
    spec.alpha = get_as<double>(j, where, "alpha", spec.alpha);
    return spec;
}

RemoteConfig parse_remote(const json& j) {
    const std::string where = "remote";
    reject_unknown_keys(j, where,
                        {"base_url", "path", "model", "max_attempts", "backoff_base_ms",
                         "timeout_ms", "max_inflight", "system_prompt"});
    RemoteConfig config;
    config.base_url = get_as<std::string>(j, where, "base_url", config.base_url);
    config.path = get_as<std::string>(j, where, "path", config.path);
    config.model = get_as<std::string>(j, where, "model", config.model);
    config.max_attempts = get_as<int>(j, where, "max_attempts", config.max_attempts);
    config.backoff_base_ms = get_as<int>(j, where, "backoff_base_ms", config.backoff_base_ms);
    config.timeout_ms = get_as<int>(j, where, "timeout_ms", config.timeout_ms);
    config.max_inflight = get_as<int>(j, where, "max_inflight", config.max_inflight);
    config.system_prompt = get_as<std::string>(j, where, "system_prompt", config.system_prompt);
    return config;
}

VerifierSection parse_verifier(const json& j) {
    const std::string where = "verifier";
    reject_unknown_keys(j, where, {"mode", "n_v", "backend", "instruction", "temperature"});
    VerifierSection section;
    section.mode = verifier_mode_from_name(get_as<std::string>(j, where, "mode", "consistency"));
    section.n_v = get_as<int>(j, where, "n_v", section.n_v);
    section.backend = backend_from_name(get_as<std::string>(j, where, "backend", "simulated"),
                                        where);
    if (j.contains("instruction") && !j.at("instruction").is_null())
        section.instruction_override = get_as<std::string>(j, where, "instruction", "");
    section.temperature = get_as<double>(j, where, "temperature", section.temperature);
    return section;
}

StrategyConfig parse_strategy(const json& j) {
    const std::string where = "strategy";
    reject_unknown_keys(j, where,
                        {"kind", "n_samples", "beam_width", "expansion", "w", "max_iterations",
                         "max_depth", "token_budget", "seed"});
    StrategyConfig config;
    config.kind = strategy_kind_from_name(get_as<std::string>(j, where, "kind",
                                                              "self_consistency"));
    config.n_samples = get_as<int>(j, where, "n_samples", config.n_samples);
    config.beam_width = get_as<int>(j, where, "beam_width", config.beam_width);
    config.expansion = get_as<int>(j, where, "expansion", config.expansion);
    config.w = get_as<double>(j, where, "w", config.w);
    config.max_iterations = get_as<int>(j, where, "max_iterations", config.max_iterations);
    config.max_depth = get_as<int>(j, where, "max_depth", config.max_depth);
    config.token_budget = get_optional_ll(j, where, "token_budget");
    config.seed = get_as<std::uint64_t>(j, where, "seed", config.seed);
    return config;
}

ExecutorConfig parse_executor(const json& j) {
    const std::string where = "executor";
    reject_unknown_keys(j, where, {"command", "timeout_ms"});
    ExecutorConfig config;
    config.command = get_as<std::vector<std::string>>(j, where, "command", config.command);
    config.timeout_ms = get_as<int>(j, where, "timeout_ms", config.timeout_ms);
    return config;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (dataset_path.empty() && sim_problems < 1)
        throw ConfigError("config: either dataset or sim_problems must be provided");
    if (sim_problems < 0) throw ConfigError("config: sim_problems must be >= 0");
    if (parallelism < 1) throw ConfigError("config: parallelism must be >= 1");
    if (pass_k.empty()) throw ConfigError("config: pass_k must be nonempty");
    for (int k : pass_k)
        if (k < 1) throw ConfigError("config: pass_k values must be >= 1");
    if (verifier.n_v < 1) throw ConfigError("config: verifier.n_v must be >= 1");
    policy.validate();
    strategy.validate();
    if (policy.backend == BackendKind::simulated) sim.validate();
    if (sim_text) sim_text->validate();
    if (strategy.kind == StrategyKind::hybrid_vote && policy.backend == BackendKind::simulated)
        sim.validate();
    if (policy.backend == BackendKind::remote || verifier.backend == BackendKind::remote)
        remote.validate();
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(j, "top level",
                        {"dataset", "output_dir", "parallelism", "pass_k", "sim_problems",
                         "policy", "sim", "sim_text", "remote", "verifier", "strategy",
                         "executor"});

    ExperimentConfig config;
    config.dataset_path = get_as<std::string>(j, "top level", "dataset", "");
    config.output_dir = get_as<std::string>(j, "top level", "output_dir", config.output_dir);
    config.parallelism = get_as<int>(j, "top level", "parallelism", config.parallelism);
    config.pass_k = get_as<std::vector<int>>(j, "top level", "pass_k", config.pass_k);
    config.sim_problems = get_as<int>(j, "top level", "sim_problems", config.sim_problems);

    if (j.contains("policy")) config.policy = parse_policy(j.at("policy"));
    if (j.contains("sim")) config.sim = parse_sim(j.at("sim"), "sim");
    if (j.contains("sim_text")) config.sim_text = parse_sim(j.at("sim_text"), "sim_text");
    if (j.contains("remote")) config.remote = parse_remote(j.at("remote"));
    if (j.contains("verifier")) config.verifier = parse_verifier(j.at("verifier"));
    if (j.contains("strategy")) config.strategy = parse_strategy(j.at("strategy"));
    if (j.contains("executor")) config.executor = parse_executor(j.at("executor"));

    // The verifier section is the single source of n_v; keep the strategy
    // view consistent with it.
    config.strategy.n_v = config.verifier.n_v;
    // A strategy-level budget is a sampling budget: propagate when the policy
    // section leaves it unset.
    if (config.strategy.token_budget && !config.policy.token_budget)
        config.policy.token_budget = config.strategy.token_budget;

    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    ExperimentConfig config = config_from_json_text(buf.str());
    if (!config.dataset_path.empty()) {
        // Dataset paths resolve relative to the config file.
        const std::filesystem::path dataset(config.dataset_path);
        if (dataset.is_relative())
            config.dataset_path = (path.parent_path() / dataset).string();
        if (!std::filesystem::exists(config.dataset_path))
            throw ConfigError("config: dataset does not exist: " + config.dataset_path);
    }
    return config;
}

}  // namespace scalesearch
