#include <cmath>
#include <limits>

#include "contrarank/kernels.hpp"

namespace contrarank::kernels {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace serial {

LogisticTerms logistic_terms(const DesignView& data, std::span<const double> theta) {
  const std::size_t d = data.cols + 1;
  LogisticTerms t;
  t.grad.assign(d, 0.0);
  t.hess.assign(d * d, 0.0);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < data.rows; ++i) {
    row[0] = 1.0;
    for (std::size_t j = 0; j < data.cols; ++j) row[j + 1] = data.features[i * data.cols + j];
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += theta[j] * row[j];
    const double y = data.labels[i];
    const double p = sigmoid(z);
    t.nll += softplus(z) - y * z;
    const double r = p - y;
    const double w = p * (1.0 - p);
    for (std::size_t a = 0; a < d; ++a) {
      t.grad[a] += r * row[a];
      for (std::size_t b = 0; b < d; ++b) t.hess[a * d + b] += w * row[a] * row[b];
    }
  }
  return t;
}

RejectionTally tally_rejections(std::span<const double> signal,
                                std::span<const std::uint8_t> unanswerable, Comparator cmp,
                                double threshold) {
  RejectionTally t;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const bool rejected =
        cmp == Comparator::kLessThan ? signal[i] < threshold : signal[i] > threshold;
    if (unanswerable[i]) {
      rejected ? ++t.tp : ++t.fn;
    } else {
      rejected ? ++t.fp : ++t.tn;
    }
  }
  return t;
}

std::vector<std::size_t> segment_argmax(const Segments& segments) {
  std::vector<std::size_t> out(segments.count(), std::numeric_limits<std::size_t>::max());
  for (std::size_t k = 0; k < segments.count(); ++k) {
    const std::size_t begin = segments.offsets[k];
    const std::size_t end = segments.offsets[k + 1];
    if (begin == end) continue;
    std::size_t best = 0;
    for (std::size_t i = begin + 1; i < end; ++i)
      if (segments.values[i] > segments.values[begin + best]) best = i - begin;
    out[k] = best;
  }
  return out;
}

}  // namespace serial
}  // namespace contrarank::kernels
