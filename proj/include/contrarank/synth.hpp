#pragma once

// Seeded synthetic score corpora with known ground truth.
//
// Each candidate's signals are drawn from a base distribution:
//   qa_confidence = sigmoid(N(0, 1.5^2))
//   (entail, neutral, contradict) = softmax of three N(0, 2^2) logits
// and correctness follows Bernoulli(sigmoid(l)) with
//   l = qa_weight * qa + e_weight * entail + c_weight * contradict + intercept.
//
// Extractive: one candidate per question, labeled by that Bernoulli draw; an
// unanswerable question (probability unanswerable_fraction) is drawn from
// the incorrect-conditioned distribution and has no gold spans.
//
// Multiple choice: the gold candidate is drawn from the base distribution
// conditioned on a correct draw and each distractor conditioned on an
// incorrect draw (rejection sampling). Per-candidate log-odds of being gold
// then equal l plus a constant, so a logistic calibrator recovers the
// generating slopes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "contrarank/records.hpp"

namespace contrarank {

struct SynthSpec {
  TaskKind task_kind = TaskKind::kMultipleChoice;
  std::size_t n_questions = 200;
  std::size_t candidates_per_question = 4;  // ignored for extractive
  double qa_weight = 3.0;
  double e_weight = 1.5;
  double c_weight = -1.2;
  double intercept = -0.5;
  double unanswerable_fraction = 0.0;  // extractive only
  std::uint64_t seed = 1;
  std::string dataset_id = "synth";
};

// Throws ConfigError for an invalid spec or one whose coefficients make a
// label class practically unreachable.
std::vector<QuestionRecord> generate_synthetic(const SynthSpec& spec);

}  // namespace contrarank
