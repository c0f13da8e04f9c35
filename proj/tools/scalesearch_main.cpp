#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "scalesearch/config.hpp"
#include "scalesearch/runner.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        const std::string item = csv.substr(pos, comma - pos);
        if (!item.empty()) values.push_back(std::stod(item));
        pos = comma + 1;
    }
    return values;
}

std::vector<int> parse_k_values(const std::string& csv) {
    std::vector<int> values;
    for (double v : parse_values(csv)) values.push_back(static_cast<int>(v));
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inference-time scaling engine for step-wise reasoning chains"};
    app.require_subcommand(1);

    std::string config_path, out_dir, axis, values_csv, records_path, labels_path, k_csv;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int reps = 1;

    CLI::App* run = app.add_subcommand("run", "Run the configured strategy over a dataset");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--seed", seed, "Override the strategy seed")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--out", out_dir, "Override the output directory");

    CLI::App* simulate =
        app.add_subcommand("simulate", "Sweep one axis over freshly simulated problems");
    simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
    simulate->add_option("--axis", axis, "Sweep axis: n_samples|token_budget|n_v|alpha")
        ->required();
    simulate->add_option("--values", values_csv, "Comma-separated axis values")->required();
    simulate->add_option("--reps", reps, "Repetitions per axis value");
    simulate->add_option("--seed", seed, "Override the strategy seed")
        ->each([&](const std::string&) { seed_set = true; });
    simulate->add_option("--out", out_dir, "Override the output directory");

    CLI::App* report = app.add_subcommand("report", "Re-summarize a records file");
    report->add_option("--records", records_path, "records.jsonl to summarize")->required();
    report->add_option("--labels", labels_path, "Manual error labels (JSON Lines)");
    report->add_option("--k", k_csv, "Comma-separated pass@k values");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            scalesearch::ExperimentConfig config = scalesearch::load_config(config_path);
            if (seed_set) config.strategy.seed = seed;
            if (!out_dir.empty()) config.output_dir = out_dir;
            return scalesearch::run_command(config);
        }
        if (simulate->parsed()) {
            scalesearch::ExperimentConfig config = scalesearch::load_config(config_path);
            if (seed_set) config.strategy.seed = seed;
            if (!out_dir.empty()) config.output_dir = out_dir;
            const std::vector<double> values = parse_values(values_csv);
            const auto points = scalesearch::simulate_sweep(config, axis, values, reps);
            std::filesystem::create_directories(config.output_dir);
            const std::filesystem::path csv =
                std::filesystem::path(config.output_dir) / ("sweep_" + axis + ".csv");
            scalesearch::write_sweep_csv(csv, points);
            std::cout << csv.string() << "\n";
            return 0;
        }
        if (report->parsed()) {
            const std::vector<int> k_values =
                k_csv.empty() ? std::vector<int>{1, 3, 5} : parse_k_values(k_csv);
            const std::filesystem::path records(records_path);
            const std::filesystem::path labels(labels_path);
            const auto rows = scalesearch::report_command(
                records, labels_path.empty() ? nullptr : &labels, k_values);
            std::cout << scalesearch::summary_csv_text(rows, k_values);
            return 0;
        }
    } catch (const scalesearch::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
