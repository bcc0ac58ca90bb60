#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference and an
// OpenMP version with the same signature. The OpenMP versions reduce over
// fixed-size row blocks combined in block order, so their output does not
// depend on the thread count. For inputs of at most kBlockRows rows the two
// versions are bit-identical.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace contrarank::kernels {

inline constexpr std::size_t kBlockRows = 512;

// Row-major n x d feature matrix plus 0/1 labels. The intercept column is
// implicit: parameter vector theta = [intercept, w_1 .. w_d].
struct DesignView {
  std::span<const double> features;
  std::span<const double> labels;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Unregularized binary log-likelihood terms at theta.
//   nll  = sum_i softplus(z_i) - y_i z_i,  z_i = theta . [1, x_i]
//   grad = sum_i (p_i - y_i) [1, x_i]
//   hess = sum_i p_i (1 - p_i) [1, x_i][1, x_i]^T   (row-major, (d+1)^2)
struct LogisticTerms {
  double nll = 0.0;
  std::vector<double> grad;
  std::vector<double> hess;
};

enum class Comparator { kLessThan, kGreaterThan };

struct RejectionTally {
  std::uint64_t tp = 0;  // unanswerable, rejected
  std::uint64_t fp = 0;  // answerable, rejected
  std::uint64_t fn = 0;  // unanswerable, accepted
  std::uint64_t tn = 0;  // answerable, accepted

  RejectionTally& operator+=(const RejectionTally& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const RejectionTally&) const = default;
};

// Segments of a flattened ragged array: segment k spans
// [offsets[k], offsets[k + 1]).
struct Segments {
  std::span<const double> values;
  std::span<const std::size_t> offsets;
  std::size_t count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

namespace serial {
LogisticTerms logistic_terms(const DesignView& data, std::span<const double> theta);
// Row i is rejected iff signal[i] compares strictly against threshold.
RejectionTally tally_rejections(std::span<const double> signal,
                                std::span<const std::uint8_t> unanswerable, Comparator cmp,
                                double threshold);
// Index of the maximum within each segment, ties to the lowest index.
// Empty segments yield SIZE_MAX.
std::vector<std::size_t> segment_argmax(const Segments& segments);
}  // namespace serial

namespace parallel {
LogisticTerms logistic_terms(const DesignView& data, std::span<const double> theta);
RejectionTally tally_rejections(std::span<const double> signal,
                                std::span<const std::uint8_t> unanswerable, Comparator cmp,
                                double threshold);
std::vector<std::size_t> segment_argmax(const Segments& segments);
}  // namespace parallel

// Numerically stable log(1 + exp(z)) and logistic function.
double softplus(double z);
double sigmoid(double z);

// Worker threads the parallel kernels will use.
int max_threads();

}  // namespace contrarank::kernels
