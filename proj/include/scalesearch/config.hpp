#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scalesearch/executor.hpp"
#include "scalesearch/policy.hpp"
#include "scalesearch/remote.hpp"
#include "scalesearch/scaling.hpp"
#include "scalesearch/verifier.hpp"

namespace scalesearch {

struct VerifierSection {
    VerifierMode mode = VerifierMode::consistency;
    int n_v = 5;
    BackendKind backend = BackendKind::simulated;
    std::optional<std::string> instruction_override;
    double temperature = 1.0;
};

struct ExperimentConfig {
    std::string dataset_path;  // may be empty for simulated problem sets
    PolicyConfig policy;
    SimPolicySpec sim;                        // simulated backend spec
    std::optional<SimPolicySpec> sim_text;    // hybrid text lane; defaults to sim
    RemoteConfig remote;
    VerifierSection verifier;
    StrategyConfig strategy;
    ExecutorConfig executor;
    std::string output_dir = "out";
    int parallelism = 4;
    std::vector<int> pass_k = {1, 3, 5};
    int sim_problems = 0;  // problems per sweep point / dataset-free runs

    void validate() const;  // throws ConfigError
};

ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace scalesearch
