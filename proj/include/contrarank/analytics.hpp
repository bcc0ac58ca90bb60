#pragma once

// Accuracy over ranked selections and signal/correctness rank correlations.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "contrarank/ranking.hpp"
#include "contrarank/records.hpp"
#include "contrarank/table.hpp"

namespace contrarank {

// Fraction of questions whose selected candidate is the gold choice. nullopt
// for an empty list; InputError when the lists are not aligned.
std::optional<double> mc_accuracy(const std::vector<QuestionRecord>& records,
                                  const std::vector<std::vector<RankedAnswer>>& selections);

enum class CorrelationSignal { kQa, kCScore, kCClass, kEScore, kEClass, kNScore, kNClass };

// "QA", "C_score", "C_class", ...
std::string_view to_string(CorrelationSignal s);
// Case-insensitive name as printed by to_string. Throws ConfigError.
CorrelationSignal parse_correlation_signal(std::string_view text);
std::vector<CorrelationSignal> all_correlation_signals();

enum class CorrelationScope { kPerDataset, kPooled };
CorrelationScope parse_correlation_scope(std::string_view text);

inline constexpr double kClassThreshold = 0.5;

// Signal value of one candidate; class signals are indicators score > 0.5.
double signal_value(CorrelationSignal s, const ScoredCandidate& c);

struct CorrelationRow {
  std::string group;  // dataset id, or "all" when pooled
  CorrelationSignal signal = CorrelationSignal::kQa;
  std::optional<double> rho;
  std::size_t observations = 0;
};

struct CorrelationReport {
  CorrelationScope scope = CorrelationScope::kPerDataset;
  std::vector<CorrelationRow> rows;
};

struct CorrelationOptions {
  // Extractive only: drop unanswerable questions.
  bool answered_only = false;
};

// Observations are every candidate for multiple choice (label: is gold) and
// the sole candidate for extractive (label: token F1 >= 0.5). Pooled scope
// groups by task kind; the group is "all" when one task kind is present and
// "all:<task_kind>" otherwise.
CorrelationReport correlation_report(const std::vector<QuestionRecord>& records,
                                     std::span<const CorrelationSignal> signals,
                                     CorrelationScope scope,
                                     const CorrelationOptions& options = {});

// Per-dataset: one row per group, score/class columns per NLI class.
// Pooled: rows (group, Confidence|Class), columns contradiction, entailment,
// neutral, QA.
Table correlation_table(const CorrelationReport& report);

}  // namespace contrarank
