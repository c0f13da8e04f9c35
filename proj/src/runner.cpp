#include "scalesearch/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "scalesearch/dataset.hpp"
#include "scalesearch/scaling.hpp"

namespace scalesearch {

namespace {

constexpr std::uint64_t kProblemDomain = 0x9B0Bull;
constexpr std::uint64_t kVerifierDomain = 0x5EEDull;
constexpr std::uint64_t kSweepDomain = 0x53EEull;
constexpr std::uint64_t kSimDataDomain = 0x9997ull;

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

}  // namespace

std::vector<Problem> make_sim_problems(const SimPolicySpec& spec, int count, std::uint64_t seed,
                                       Modality modality) {
    spec.validate();
    std::vector<Problem> problems;
    problems.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        Problem problem;
        char id[32];
        std::snprintf(id, sizeof id, "sim-%05d", i + 1);
        problem.id = id;
        problem.question = "Choose the correct option.";
        problem.answer_choices = spec.alphabet;
        problem.gold_answer = spec.correct_answer;
        problem.domain_tag = "simulated";
        if (modality == Modality::multi_modal) {
            RngStream pixels(derive_key(derive_key(seed, kSimDataDomain),
                                        static_cast<std::uint64_t>(i)));
            ToyImage image = ToyImage::filled(8, 8, 0);
            for (int& cell : image.cells) cell = static_cast<int>(pixels.below(256));
            problem.images.push_back(ImageRef::inline_image("input-0", std::move(image)));
        }
        problems.push_back(std::move(problem));
    }
    return problems;
}

RunRecord run_one(const ExperimentConfig& config, const Problem& problem,
                  std::uint64_t problem_seed) {
    const auto started = std::chrono::steady_clock::now();

    Executor executor(config.executor);
    StrategyConfig strategy = config.strategy;
    strategy.seed = problem_seed;
    strategy.n_v = config.verifier.n_v;

    RunRecord record;
    record.problem_id = problem.id;
    record.strategy = strategy_kind_name(strategy.kind);
    record.gold_answer = problem.gold_answer;

    std::shared_ptr<RemoteClient> client;
    if (config.policy.backend == BackendKind::remote ||
        config.verifier.backend == BackendKind::remote)
        client = std::make_shared<RemoteClient>(config.remote);

    std::unique_ptr<TrialBackend> trial_backend;
    if (config.verifier.backend == BackendKind::simulated) {
        trial_backend = std::make_unique<SimVerifierBackend>(
            config.sim, derive_key(problem_seed, kVerifierDomain));
    } else {
        trial_backend =
            std::make_unique<RemoteVerifierBackend>(client, config.verifier.temperature);
    }
    ChainScorer scorer(config.verifier.mode, config.verifier.n_v, *trial_backend);

    auto make_policy = [&](const PolicyConfig& policy_config,
                           const SimPolicySpec& spec) -> std::unique_ptr<PolicyBackend> {
        if (policy_config.backend == BackendKind::simulated)
            return std::make_unique<SimulatedPolicy>(spec, policy_config);
        return std::make_unique<RemotePolicy>(client, policy_config);
    };

    StrategyOutcome outcome;
    bool aborted = false;
    try {
        if (strategy.kind == StrategyKind::hybrid_vote) {
            PolicyConfig text_config = config.policy;
            text_config.modality = Modality::text_only;
            PolicyConfig mm_config = config.policy;
            mm_config.modality = Modality::multi_modal;

            auto text_backend = make_policy(text_config, config.sim_text.value_or(config.sim));
            auto mm_backend = make_policy(mm_config, config.sim);
            ChainSampler text_sampler(*text_backend, executor, text_config,
                                      derive_key(problem_seed, 1), "hybrid_vote");
            ChainSampler mm_sampler(*mm_backend, executor, mm_config,
                                    derive_key(problem_seed, 2), "hybrid_vote");
            outcome = hybrid_vote(problem, text_sampler, mm_sampler, strategy);
        } else {
            auto backend = make_policy(config.policy, config.sim);
            ChainSampler sampler(*backend, executor, config.policy, problem_seed,
                                 strategy_kind_name(strategy.kind));
            switch (strategy.kind) {
                case StrategyKind::self_consistency:
                    outcome = self_consistency(problem, sampler, strategy);
                    break;
                case StrategyKind::best_of_n:
                    outcome = best_of_n(problem, sampler, scorer, strategy);
                    break;
                case StrategyKind::beam_search:
                    outcome = beam_search(problem, sampler, scorer, strategy);
                    break;
                case StrategyKind::mcts:
                    outcome = mcts(problem, sampler, scorer, strategy);
                    break;
                case StrategyKind::hybrid_vote:
                    break;  // handled above
            }
        }
    } catch (const Error& e) {
        aborted = true;
        record.abort_reason = e.what();
    }

    if (!aborted) {
        record.selected_answer = outcome.selected_answer;
        for (const PoolEntry& entry : outcome.pool)
            record.pool.push_back({entry.answer, entry.score});
    }
    record.tokens_total = outcome.tokens_total;
    record.policy_calls = outcome.policy_calls;
    record.verifier_calls = outcome.verifier_calls;
    if (record.selected_answer && record.gold_answer)
        record.correct = *record.selected_answer == *record.gold_answer;
    const Chain* selected =
        outcome.selected_chain.has_value() ? &*outcome.selected_chain : nullptr;
    record.error_tag = tag_error(record, selected, nullptr);
    record.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
}

RunResult run_experiment(const ExperimentConfig& config, const std::vector<Problem>& problems) {
    config.validate();
    RunResult result;
    result.records.resize(problems.size());
    if (problems.empty()) return result;

    const int workers = std::max(1, std::min<int>(config.parallelism,
                                                  static_cast<int>(problems.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= problems.size()) return;
            result.records[i] =
                run_one(config, problems[i],
                        derive_key(derive_key(config.strategy.seed, kProblemDomain),
                                   static_cast<std::uint64_t>(i)));
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) threads.emplace_back(work);
        for (std::thread& thread : threads) thread.join();
    }

    for (const RunRecord& record : result.records)
        if (record.abort_reason) ++result.aborted;
    result.summary = summarize(result.records, config.pass_k);
    return result;
}

namespace {

nlohmann::ordered_json record_to_json(const RunRecord& record) {
    nlohmann::ordered_json j;
    j["problem_id"] = record.problem_id;
    j["strategy"] = record.strategy;
    j["selected_answer"] =
        record.selected_answer ? nlohmann::ordered_json(*record.selected_answer)
                               : nlohmann::ordered_json(nullptr);
    j["gold_answer"] = record.gold_answer ? nlohmann::ordered_json(*record.gold_answer)
                                          : nlohmann::ordered_json(nullptr);
    j["pool"] = nlohmann::ordered_json::array();
    for (const RecordPoolEntry& entry : record.pool) {
        nlohmann::ordered_json e;
        e["answer"] = entry.answer ? nlohmann::ordered_json(*entry.answer)
                                   : nlohmann::ordered_json(nullptr);
        e["score"] = entry.score ? nlohmann::ordered_json(*entry.score)
                                 : nlohmann::ordered_json(nullptr);
        j["pool"].push_back(std::move(e));
    }
    j["correct"] = record.correct ? nlohmann::ordered_json(*record.correct)
                                  : nlohmann::ordered_json(nullptr);
    j["tokens_total"] = record.tokens_total;
    j["policy_calls"] = record.policy_calls;
    j["verifier_calls"] = record.verifier_calls;
    if (record.error_tag) {
        j["error_tag"] = {{"category", error_category_name(record.error_tag->category)},
                          {"source", record.error_tag->source == LabelSource::manual
                                         ? "manual"
                                         : "automatic"}};
    } else {
        j["error_tag"] = nullptr;
    }
    j["abort_reason"] = record.abort_reason ? nlohmann::ordered_json(*record.abort_reason)
                                            : nlohmann::ordered_json(nullptr);
    return j;
}

RunRecord record_from_json(const nlohmann::json& j) {
    RunRecord record;
    record.problem_id = j.at("problem_id").get<std::string>();
    record.strategy = j.at("strategy").get<std::string>();
    if (!j.at("selected_answer").is_null())
        record.selected_answer = j.at("selected_answer").get<std::string>();
    if (!j.at("gold_answer").is_null())
        record.gold_answer = j.at("gold_answer").get<std::string>();
    for (const auto& e : j.at("pool")) {
        RecordPoolEntry entry;
        if (!e.at("answer").is_null()) entry.answer = e.at("answer").get<std::string>();
        if (!e.at("score").is_null()) entry.score = e.at("score").get<double>();
        record.pool.push_back(std::move(entry));
    }
    if (!j.at("correct").is_null()) record.correct = j.at("correct").get<bool>();
    record.tokens_total = j.at("tokens_total").get<long long>();
    record.policy_calls = j.at("policy_calls").get<long long>();
    record.verifier_calls = j.at("verifier_calls").get<long long>();
    if (!j.at("error_tag").is_null()) {
        ErrorTag tag;
        tag.category = error_category_from_name(j.at("error_tag").at("category"));
        tag.source = j.at("error_tag").value("source", "automatic") == std::string("manual")
                         ? LabelSource::manual
                         : LabelSource::automatic;
        record.error_tag = tag;
    }
    if (!j.at("abort_reason").is_null())
        record.abort_reason = j.at("abort_reason").get<std::string>();
    return record;
}

}  // namespace

void write_records(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write records: " + path.string());
    for (const RunRecord& record : records) out << record_to_json(record).dump() << "\n";
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read records: " + path.string());
    std::vector<RunRecord> records;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_number, e.what());
        }
    }
    return records;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows,
                       const std::vector<int>& k_values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write summary: " + path.string());
    out << summary_csv_text(rows, k_values);
}

std::string summary_csv_text(const std::vector<SummaryRow>& rows,
                             const std::vector<int>& k_values) {
    std::ostringstream out;
    out << "strategy,records,with_gold,accuracy";
    for (int k : k_values) out << ",pass@" << k;
    out << ",total_tokens,mean_tokens,policy_calls,verifier_calls"
        << ",wrong_decision,execution_error,ineffective_operation,invalid_reasoning,aborted\n";
    for (const SummaryRow& row : rows) {
        out << row.strategy << "," << row.records << "," << row.with_gold << ","
            << (row.accuracy ? format_double(*row.accuracy) : std::string());
        for (int k : k_values) {
            auto it = row.pass_at.find(k);
            out << "," << (it != row.pass_at.end() ? format_double(it->second) : std::string());
        }
        out << "," << row.total_tokens << "," << format_double(row.mean_tokens) << ","
            << row.policy_calls << "," << row.verifier_calls;
        for (long long count : row.error_counts) out << "," << count;
        out << "," << row.aborted << "\n";
    }
    return out.str();
}

int run_command(const ExperimentConfig& config) {
    config.validate();
    std::vector<Problem> problems;
    if (!config.dataset_path.empty()) {
        problems = load_dataset(config.dataset_path);
    } else {
        problems = make_sim_problems(config.sim, config.sim_problems,
                                     derive_key(config.strategy.seed, kSimDataDomain),
                                     config.policy.modality);
    }

    const RunResult result = run_experiment(config, problems);

    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path out_dir(config.output_dir);
    write_records(out_dir / "records.jsonl", result.records);
    write_summary_csv(out_dir / "summary.csv", result.summary, config.pass_k);
    return result.aborted > 0 ? 1 : 0;
}

std::vector<SweepPoint> simulate_sweep(const ExperimentConfig& config, const std::string& axis,
                                       const std::vector<double>& values, int reps) {
    if (axis != "n_samples" && axis != "token_budget" && axis != "n_v" && axis != "alpha")
        throw ConfigError("unknown sweep axis: " + axis);
    if (values.empty()) throw ConfigError("sweep needs at least one axis value");
    if (reps < 1) throw ConfigError("sweep repetitions must be >= 1");
    if (config.sim_problems < 1)
        throw ConfigError("sweep needs sim_problems >= 1 (problems are freshly simulated)");
    if (config.policy.backend != BackendKind::simulated)
        throw ConfigError("sweep requires the simulated policy backend");

    std::vector<SweepPoint> points;
    for (double value : values) {
        for (int rep = 0; rep < reps; ++rep) {
            // Seeds depend on the repetition only: points along the axis share
            // chains (common random numbers), so monotone effects are exact.
            const std::uint64_t rep_seed =
                derive_key(derive_key(config.strategy.seed, kSweepDomain),
                           static_cast<std::uint64_t>(rep));

            ExperimentConfig point_config = config;
            point_config.strategy.seed = rep_seed;
            if (axis == "n_samples") {
                point_config.strategy.n_samples = static_cast<int>(value);
            } else if (axis == "token_budget") {
                point_config.policy.token_budget = static_cast<long long>(value);
                point_config.strategy.token_budget = static_cast<long long>(value);
            } else if (axis == "n_v") {
                point_config.verifier.n_v = static_cast<int>(value);
                point_config.strategy.n_v = static_cast<int>(value);
            } else {
                point_config.sim.alpha = value;
            }

            const std::vector<Problem> problems =
                make_sim_problems(point_config.sim, point_config.sim_problems, rep_seed,
                                  point_config.policy.modality);
            const RunResult result = run_experiment(point_config, problems);

            SweepPoint point;
            point.axis = axis;
            point.value = value;
            point.rep = rep;
            point.seed = rep_seed;
            point.problems = static_cast<long long>(result.records.size());

            long long correct = 0, passes = 0;
            long long tokens = 0;
            double score_sum = 0.0, score_sq_sum = 0.0;
            long long score_count = 0;
            const int k = point_config.strategy.n_samples;
            for (const RunRecord& record : result.records) {
                if (record.correct.value_or(false)) ++correct;
                tokens += record.tokens_total;
                const std::size_t limit =
                    std::min<std::size_t>(record.pool.size(), static_cast<std::size_t>(k));
                for (std::size_t i = 0; i < limit; ++i) {
                    if (record.pool[i].answer && record.gold_answer &&
                        *record.pool[i].answer == *record.gold_answer) {
                        ++passes;
                        break;
                    }
                }
                for (const RecordPoolEntry& entry : record.pool) {
                    if (!entry.score) continue;
                    score_sum += *entry.score;
                    score_sq_sum += *entry.score * *entry.score;
                    ++score_count;
                }
            }
            const double n = static_cast<double>(result.records.size());
            point.accuracy = correct / n;
            point.pass_at_n = passes / n;
            point.mean_tokens = tokens / n;
            if (score_count > 0) {
                const double mean = score_sum / score_count;
                point.score_variance = score_sq_sum / score_count - mean * mean;
            } else {
                point.score_variance = std::numeric_limits<double>::quiet_NaN();
            }
            points.push_back(std::move(point));
        }
    }
    return points;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write sweep csv: " + path.string());
    out << "axis,value,rep,seed,problems,accuracy,pass_at_n,mean_tokens,score_variance\n";
    for (const SweepPoint& point : points) {
        out << point.axis << "," << format_double(point.value) << "," << point.rep << ","
            << point.seed << "," << point.problems << "," << format_double(point.accuracy) << ","
            << format_double(point.pass_at_n) << "," << format_double(point.mean_tokens) << ","
            << (std::isnan(point.score_variance) ? std::string()
                                                 : format_double(point.score_variance))
            << "\n";
    }
}

std::map<std::string, ErrorCategory> load_manual_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open labels: " + path.string());
    std::map<std::string, ErrorCategory> labels;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            labels[j.at("problem_id").get<std::string>()] =
                error_category_from_name(j.at("category").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_number, e.what());
        } catch (const ConfigError& e) {
            throw ParseError(line_number, e.what());
        }
    }
    return labels;
}

std::vector<SummaryRow> report_command(const std::filesystem::path& records_path,
                                       const std::filesystem::path* labels_path,
                                       const std::vector<int>& k_values) {
    std::vector<RunRecord> records = read_records(records_path);
    if (labels_path) {
        const std::map<std::string, ErrorCategory> labels = load_manual_labels(*labels_path);
        for (RunRecord& record : records) {
            if (record.correct.value_or(true)) continue;
            auto it = labels.find(record.problem_id);
            if (it != labels.end())
                record.error_tag = ErrorTag{it->second, LabelSource::manual};
        }
    }
    return summarize(records, k_values);
}

}  // namespace scalesearch
