#pragma once

// Scalar QA metrics: SQuAD-style answer normalization, token F1 and Spearman
// rank correlation. Undefined results are std::nullopt, never a silent 0.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace contrarank {

// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse
// whitespace.
std::string normalize_answer(std::string_view text);

// Max over golds of token-level F1 between normalized token multisets. An
// empty gold list (or one whose spans all normalize to "") is treated as the
// single gold "" (unanswerable): an empty prediction scores 1, anything else 0.
double token_f1(std::string_view prediction, std::span<const std::string> golds);
double token_f1(std::string_view prediction, std::string_view gold);

// Correctly rounded sum of the values (Shewchuk partials with a final
// half-way correction), so the result does not depend on their order.
double exact_sum(std::span<const double> values);

// 1-based ranks; tied values share the mean of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. nullopt when lengths differ, fewer
// than two observations, or either series is constant.
std::optional<double> spearman_rho(std::span<const double> xs, std::span<const double> ys);

}  // namespace contrarank
