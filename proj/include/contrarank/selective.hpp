#pragma once

// Selective QA: sort questions by confidence, answer the top fraction
// ("coverage") and score only those.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contrarank/ranking.hpp"
#include "contrarank/records.hpp"
#include "contrarank/table.hpp"

namespace contrarank {

// Which candidate is answered for a multiple-choice question.
//   kQa:     the QA model's pick (argmax qa_confidence); the policy only
//            orders questions, via the rank score of that answer.
//   kPolicy: the policy's own argmax; confidence is question_confidence.
// Extractive records have a single candidate, so both modes coincide.
enum class SelectionMode { kQa, kPolicy };
SelectionMode parse_selection_mode(std::string_view text);

enum class MetricKind { kAccuracy, kF1 };
std::string_view to_string(MetricKind m);

struct CoverageRow {
  double coverage = 1.0;
  std::size_t n_answered = 0;
  MetricKind metric = MetricKind::kAccuracy;
  double value = 0.0;
};

struct CoverageReport {
  std::string dataset_id;
  std::string policy_name;
  std::vector<CoverageRow> rows;
};

inline const std::vector<double> kDefaultCoverages{0.2, 0.5};

// floor(coverage * total), at least 1. A 1e-9 slack absorbs products such as
// 0.29 * 100 landing just below an integer.
std::size_t answered_count(double coverage, std::size_t total);

struct QuestionOutcome {
  std::string question_id;
  double confidence = 0.0;
  double score = 0.0;  // 0/1 accuracy or token F1
};

// Per-question confidence and score, in input order.
std::vector<QuestionOutcome> score_questions(const std::vector<QuestionRecord>& records,
                                             const RankingPolicy& policy, SelectionMode mode);

// Questions sorted by confidence descending (ties by question_id), metric over
// the top answered_count(c, N) for each coverage c. Throws InputError for an
// empty record list, mixed task kinds, or a coverage outside (0, 1].
CoverageReport coverage_curve(const std::vector<QuestionRecord>& records,
                              const RankingPolicy& policy, const std::vector<double>& coverages,
                              SelectionMode mode = SelectionMode::kQa);

// Metric of every question, no selection.
double unselective_metric(const std::vector<QuestionRecord>& records, SelectionMode mode,
                          const RankingPolicy& policy);

// dataset x coverage x policy grid, plus the per-coverage mean across datasets.
struct PolicyGrid {
  std::vector<std::string> policies;
  std::vector<double> coverages;
  std::vector<std::string> datasets;
  std::vector<MetricKind> metrics;  // per dataset
  // values[d][c][p]; nullopt marks a missing policy for that dataset
  std::vector<std::vector<std::vector<std::optional<double>>>> values;
  std::vector<std::vector<std::optional<double>>> average;  // [c][p]
};

// Policies are named columns; a nullopt policy yields NA cells (used when a
// calibration model could not be trained).
struct NamedPolicy {
  std::string name;
  std::optional<RankingPolicy> policy;
};

PolicyGrid compare_policies(const std::vector<QuestionRecord>& records,
                            const std::vector<NamedPolicy>& policies,
                            const std::vector<double>& coverages,
                            SelectionMode mode = SelectionMode::kQa);

// Columns: coverage, dataset, metric, one per policy. Rows grouped by
// coverage, datasets sorted, "avg" last in each group.
Table grid_table(const PolicyGrid& grid);

}  // namespace contrarank
