#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scalesearch/core.hpp"

namespace scalesearch {

enum class ErrorCategory { wrong_decision, execution_error, ineffective_operation, invalid_reasoning };
enum class LabelSource { automatic, manual };

std::string error_category_name(ErrorCategory category);
ErrorCategory error_category_from_name(const std::string& name);

struct ErrorTag {
    ErrorCategory category = ErrorCategory::invalid_reasoning;
    LabelSource source = LabelSource::automatic;
};

struct RecordPoolEntry {
    std::optional<std::string> answer;
    std::optional<double> score;
};

// Per-problem outcome of one strategy run.
struct RunRecord {
    std::string problem_id;
    std::string strategy;
    std::optional<std::string> selected_answer;
    std::optional<std::string> gold_answer;
    std::vector<RecordPoolEntry> pool;  // in the strategy's ranking order
    std::optional<bool> correct;        // present iff selected and gold both present
    long long tokens_total = 0;
    long long policy_calls = 0;
    long long verifier_calls = 0;
    std::optional<ErrorTag> error_tag;
    std::optional<std::string> abort_reason;
    double wall_time_s = 0.0;  // in-memory only; never persisted (determinism)
};

// Mean of the correct indicators. Requires every record to carry `correct`.
double accuracy(const std::vector<RunRecord>& records);

// Fraction of records whose gold answer appears among the first
// min(k, |pool|) pool entries.
double pass_at_k(const std::vector<RunRecord>& records, int k);

// Auto-tagging with precedence WrongDecision > ExecutionError >
// InvalidReasoning; a manual label always wins (and is the only way to get
// IneffectiveOperation). Only incorrect records are tagged.
std::optional<ErrorTag> tag_error(const RunRecord& record, const Chain* selected_chain,
                                  const std::map<std::string, ErrorCategory>* manual_labels);

struct SummaryRow {
    std::string strategy;
    long long records = 0;
    long long with_gold = 0;
    // Fraction of gold-bearing records answered correctly; records that
    // selected nothing count as incorrect. Absent when no record has gold.
    std::optional<double> accuracy;
    std::map<int, double> pass_at;  // k -> fraction over gold-bearing records
    long long total_tokens = 0;
    double mean_tokens = 0.0;
    long long policy_calls = 0;
    long long verifier_calls = 0;
    std::array<long long, 4> error_counts{};  // indexed by ErrorCategory
    long long aborted = 0;
};

// One row per strategy kind present in the records.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                  const std::vector<int>& k_values);

}  // namespace scalesearch
