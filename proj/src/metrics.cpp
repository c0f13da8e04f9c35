#include "scalesearch/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "scalesearch/errors.hpp"

namespace scalesearch {

std::string error_category_name(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::wrong_decision: return "wrong_decision";
        case ErrorCategory::execution_error: return "execution_error";
        case ErrorCategory::ineffective_operation: return "ineffective_operation";
        case ErrorCategory::invalid_reasoning: return "invalid_reasoning";
    }
    return "unknown";
}

ErrorCategory error_category_from_name(const std::string& name) {
    if (name == "wrong_decision") return ErrorCategory::wrong_decision;
    if (name == "execution_error") return ErrorCategory::execution_error;
    if (name == "ineffective_operation") return ErrorCategory::ineffective_operation;
    if (name == "invalid_reasoning") return ErrorCategory::invalid_reasoning;
    throw ConfigError("unknown error category: " + name);
}

double accuracy(const std::vector<RunRecord>& records) {
    if (records.empty()) throw EmptyInput();
    long long correct = 0;
    for (const RunRecord& record : records) {
        if (!record.correct.has_value())
            throw std::invalid_argument("accuracy requires records with a correctness verdict");
        if (*record.correct) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

double pass_at_k(const std::vector<RunRecord>& records, int k) {
    if (records.empty()) throw EmptyInput();
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    long long passes = 0;
    for (const RunRecord& record : records) {
        if (!record.gold_answer) continue;
        const std::size_t limit = std::min<std::size_t>(record.pool.size(),
                                                        static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < limit; ++i) {
            if (record.pool[i].answer && *record.pool[i].answer == *record.gold_answer) {
                ++passes;
                break;
            }
        }
    }
    return static_cast<double>(passes) / static_cast<double>(records.size());
}

std::optional<ErrorTag> tag_error(const RunRecord& record, const Chain* selected_chain,
                                  const std::map<std::string, ErrorCategory>* manual_labels) {
    if (!record.correct.has_value() || *record.correct) return std::nullopt;

    if (manual_labels) {
        auto it = manual_labels->find(record.problem_id);
        if (it != manual_labels->end()) return ErrorTag{it->second, LabelSource::manual};
    }

    if (record.gold_answer) {
        for (const RecordPoolEntry& entry : record.pool) {
            if (entry.answer && *entry.answer == *record.gold_answer)
                return ErrorTag{ErrorCategory::wrong_decision, LabelSource::automatic};
        }
    }
    if (selected_chain) {
        for (const ThoughtStep& step : selected_chain->steps) {
            if (step.exec_error)
                return ErrorTag{ErrorCategory::execution_error, LabelSource::automatic};
        }
    }
    return ErrorTag{ErrorCategory::invalid_reasoning, LabelSource::automatic};
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                  const std::vector<int>& k_values) {
    if (records.empty()) throw EmptyInput();

    std::vector<SummaryRow> rows;
    auto row_for = [&](const std::string& strategy) -> SummaryRow& {
        for (SummaryRow& row : rows)
            if (row.strategy == strategy) return row;
        rows.push_back(SummaryRow{});
        rows.back().strategy = strategy;
        return rows.back();
    };

    struct Tally {
        long long correct = 0;
        std::map<int, long long> passes;
    };
    std::map<std::string, Tally> tallies;

    for (const RunRecord& record : records) {
        SummaryRow& row = row_for(record.strategy);
        Tally& tally = tallies[record.strategy];
        ++row.records;
        row.total_tokens += record.tokens_total;
        row.policy_calls += record.policy_calls;
        row.verifier_calls += record.verifier_calls;
        if (record.abort_reason) ++row.aborted;
        if (record.error_tag)
            ++row.error_counts[static_cast<std::size_t>(record.error_tag->category)];

        if (record.gold_answer) {
            ++row.with_gold;
            // A record that selected nothing counts as incorrect.
            if (record.correct.value_or(false)) ++tally.correct;
            for (int k : k_values) {
                const std::size_t limit = std::min<std::size_t>(record.pool.size(),
                                                                static_cast<std::size_t>(k));
                for (std::size_t i = 0; i < limit; ++i) {
                    if (record.pool[i].answer && *record.pool[i].answer == *record.gold_answer) {
                        ++tally.passes[k];
                        break;
                    }
                }
            }
        }
    }

    for (SummaryRow& row : rows) {
        const Tally& tally = tallies[row.strategy];
        row.mean_tokens = static_cast<double>(row.total_tokens) /
                          static_cast<double>(row.records);
        if (row.with_gold > 0) {
            row.accuracy = static_cast<double>(tally.correct) /
                           static_cast<double>(row.with_gold);
            for (int k : k_values) {
                auto it = tally.passes.find(k);
                const long long passes = it == tally.passes.end() ? 0 : it->second;
                row.pass_at[k] = static_cast<double>(passes) /
                                 static_cast<double>(row.with_gold);
            }
        }
    }
    return rows;
}

}  // namespace scalesearch
