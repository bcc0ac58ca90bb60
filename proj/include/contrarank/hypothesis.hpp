#pragma once

// Post-processing for question-to-statement (QA2D) outputs: make sure the
// candidate answer actually appears in the hypothesis handed to the NLI model.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace contrarank {

// Lowercase, split on whitespace, strip leading/trailing ASCII punctuation
// from each token, drop tokens that become empty. Interior punctuation stays
// ("co-operate").
std::vector<std::string> tokenize_simple(std::string_view text);

struct OverlapResult {
  double ratio = 1.0;
  std::size_t answer_tokens = 0;   // distinct answer tokens
  std::size_t matched_tokens = 0;  // distinct answer tokens found in the statement
};

// Fraction of distinct answer tokens present in the statement. An answer with
// no tokens has ratio 1.0.
OverlapResult token_overlap(std::string_view answer, std::string_view statement);

inline constexpr double kMinAnswerOverlap = 0.5;

// Appends " " + answer when fewer than half of the answer's tokens occur in
// the statement; otherwise returns the statement unchanged. A ratio of exactly
// 0.5 does not append.
std::string postprocess_hypothesis(std::string_view answer, std::string_view statement);

}  // namespace contrarank
