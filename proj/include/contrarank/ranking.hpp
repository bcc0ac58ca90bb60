#pragma once

// Answer selection: argmax over a record's candidates of a ranking scalar.
//
// Single-signal policies use the raw score, except contradiction, which is
// inverted to 1 - c so that the argmax picks the least contradicted answer.
// Calibrated policies use the calibration model's predicted probability.
// Ties go to the lowest candidate index.

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "contrarank/calibration.hpp"
#include "contrarank/records.hpp"

namespace contrarank {

class RankingPolicy {
 public:
  static RankingPolicy single(Feature signal);
  static RankingPolicy calibrated(CalibrationModel model);
  // "qa" | "e" | "c" | "n" | "calibrated:PATH"
  static RankingPolicy parse(std::string_view spec);

  bool is_calibrated() const { return std::holds_alternative<CalibrationModel>(kind_); }
  // Only valid for single-signal / calibrated policies respectively.
  Feature signal() const { return std::get<Feature>(kind_); }
  const CalibrationModel& model() const { return std::get<CalibrationModel>(kind_); }

  // "QA", "E", "C", "N" or the calibration feature set, e.g. "QA+E+C".
  std::string name() const;

 private:
  explicit RankingPolicy(std::variant<Feature, CalibrationModel> kind) : kind_(std::move(kind)) {}
  std::variant<Feature, CalibrationModel> kind_;
};

double rank_score(const RankingPolicy& policy, const ScoredCandidate& candidate);

struct RankedAnswer {
  std::size_t candidate_index = 0;
  double rank_score = 0.0;
  bool selected = false;
};

// Scores every candidate and marks the argmax. Throws InputError when the
// record has no candidates.
std::vector<RankedAnswer> select_answer(const RankingPolicy& policy, const QuestionRecord& record);

// Index of the selected entry of a select_answer result.
std::size_t selected_index(const std::vector<RankedAnswer>& ranked);

// Rank score of the selected candidate (the sole candidate for extractive).
double question_confidence(const RankingPolicy& policy, const QuestionRecord& record);

enum class NliClass { kEntailment, kNeutral, kContradiction };
std::string_view to_string(NliClass c);
// Largest of the three scores; ties resolve entailment, neutral, contradiction.
NliClass dominant_class(const NliScores& nli);

inline constexpr double kContradictedThreshold = 0.5;

struct CandidateExplanation {
  std::size_t candidate_index = 0;
  double rank_score = 0.0;
  bool selected = false;
  NliClass dominant = NliClass::kNeutral;
  bool contradicted = false;  // contradict > 0.5
};

std::vector<CandidateExplanation> explain_selection(const RankingPolicy& policy,
                                                    const QuestionRecord& record);

// Selected candidate index for every record, computed by the segmented
// argmax kernel. Throws InputError if any record has no candidates.
std::vector<std::size_t> select_all(const RankingPolicy& policy,
                                    const std::vector<QuestionRecord>& records,
                                    Backend backend = Backend::kParallel);

}  // namespace contrarank
