#pragma once

// Threshold-rule rejection of unanswerable extractive questions.
//
// Metric conventions follow the published SQuAD 2.0 rejection table, whose
// recall and accept columns use the whole corpus as denominator:
//   rejects          = tp / unanswerable_total
//   accepts          = 1 - fp / total
//   precision        = tp / (tp + fp)
//   recall_paper     = tp / total
//   recall_standard  = tp / unanswerable_total
//   f1               = harmonic mean of precision and recall_paper

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contrarank/calibration.hpp"
#include "contrarank/kernels.hpp"
#include "contrarank/records.hpp"
#include "contrarank/table.hpp"

namespace contrarank {

using kernels::Comparator;

// "lt" | "gt" (also "<" / ">"). Throws ConfigError.
Comparator parse_comparator(std::string_view text);

struct RejectionRule {
  Feature signal = Feature::kContradict;  // QA, E or C
  Comparator comparator = Comparator::kGreaterThan;
  double threshold = 0.5;

  // "C > 50%"
  std::string label() const;
  // C with greater_than, QA/E with less_than.
  bool conventional() const;
};

struct RejectionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  std::uint64_t total = 0;
  std::uint64_t unanswerable_total = 0;

  bool operator==(const RejectionCounts&) const = default;
};

// Fractions are nullopt when their denominator is zero. f1 is 0 whenever
// tp is 0.
struct RejectionMetrics {
  std::optional<double> rejects;
  std::optional<double> accepts;
  std::optional<double> precision;
  std::optional<double> recall_paper;
  std::optional<double> recall_standard;
  double f1 = 0.0;
};

struct RejectionReport {
  RejectionRule rule;
  RejectionCounts counts;
  RejectionMetrics metrics;
};

// Signal value the rule compares: raw qa_confidence, entail or contradict.
double rule_signal(Feature signal, const ScoredCandidate& candidate);

// Throws InputError for multiple-choice records or records without exactly
// one candidate, ConfigError for a neutral-signal rule.
RejectionCounts apply_rule(const RejectionRule& rule, const std::vector<QuestionRecord>& records,
                           Backend backend = Backend::kParallel);

// Throws InputError if the counts do not partition the corpus.
RejectionMetrics rejection_metrics(const RejectionCounts& counts);

// One report per threshold, ordered by ascending threshold.
std::vector<RejectionReport> threshold_sweep(Feature signal, Comparator comparator,
                                             std::vector<double> thresholds,
                                             const std::vector<QuestionRecord>& records,
                                             Backend backend = Backend::kParallel);

// Columns: rule, rejects, accepts, precision, recall, f1, recall_standard,
// tp, fp, fn, tn. Percentages with two decimals.
Table rejection_table(const std::vector<RejectionReport>& reports);

}  // namespace contrarank
