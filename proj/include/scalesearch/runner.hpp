#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scalesearch/config.hpp"
#include "scalesearch/core.hpp"
#include "scalesearch/metrics.hpp"

namespace scalesearch {

struct RunResult {
    std::vector<RunRecord> records;  // one per problem, in dataset order
    std::vector<SummaryRow> summary;
    long long aborted = 0;
};

// Runs the configured strategy on one problem. problem_seed fully determines
// every random choice made for this problem.
RunRecord run_one(const ExperimentConfig& config, const Problem& problem,
                  std::uint64_t problem_seed);

// Runs all problems, bounded by config.parallelism. Record order always
// matches dataset order regardless of scheduling.
RunResult run_experiment(const ExperimentConfig& config, const std::vector<Problem>& problems);

void write_records(const std::filesystem::path& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records(const std::filesystem::path& path);
std::string summary_csv_text(const std::vector<SummaryRow>& rows,
                             const std::vector<int>& k_values);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows,
                       const std::vector<int>& k_values);

// Loads the dataset (or synthesizes simulated problems), runs, writes
// records.jsonl + summary.csv under config.output_dir. Returns the process
// exit status: 0 on full completion, 1 when any problem aborted.
int run_command(const ExperimentConfig& config);

// Synthetic problems for the simulated policy: gold = spec.correct_answer,
// choices = alphabet, one deterministic 8x8 input image per problem when the
// modality is multi-modal.
std::vector<Problem> make_sim_problems(const SimPolicySpec& spec, int count, std::uint64_t seed,
                                       Modality modality);

struct SweepPoint {
    std::string axis;
    double value = 0.0;
    int rep = 0;
    std::uint64_t seed = 0;
    long long problems = 0;
    double accuracy = 0.0;
    double pass_at_n = 0.0;
    double mean_tokens = 0.0;
    double score_variance = 0.0;  // NaN when the strategy produces no scores
};

// Sweeps one axis of {n_samples, token_budget, n_v, alpha} over freshly
// simulated problems. Seeds depend on the repetition only, so points along
// the axis share problems and chains (common random numbers).
std::vector<SweepPoint> simulate_sweep(const ExperimentConfig& config, const std::string& axis,
                                       const std::vector<double>& values, int reps);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points);

// records + optional manual labels -> fresh summary rows.
std::vector<SummaryRow> report_command(const std::filesystem::path& records_path,
                                       const std::filesystem::path* labels_path,
                                       const std::vector<int>& k_values);

// JSON Lines of {"problem_id", "category"}.
std::map<std::string, ErrorCategory> load_manual_labels(const std::filesystem::path& path);

}  // namespace scalesearch
