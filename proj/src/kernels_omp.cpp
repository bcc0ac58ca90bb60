#include <algorithm>
#include <cstdint>
#include <limits>

#include "contrarank/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace contrarank::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

LogisticTerms logistic_terms(const DesignView& data, std::span<const double> theta) {
  const std::size_t d = data.cols + 1;
  const std::size_t blocks = (data.rows + kBlockRows - 1) / kBlockRows;
  std::vector<LogisticTerms> partial(blocks);

#pragma omp parallel for schedule(static) if (blocks > 1)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
    const std::size_t first = static_cast<std::size_t>(b) * kBlockRows;
    const std::size_t rows = std::min(kBlockRows, data.rows - first);
    DesignView block{data.features.subspan(first * data.cols, rows * data.cols),
                     data.labels.subspan(first, rows), rows, data.cols};
    partial[static_cast<std::size_t>(b)] = serial::logistic_terms(block, theta);
  }

  LogisticTerms t;
  t.grad.assign(d, 0.0);
  t.hess.assign(d * d, 0.0);
  for (const auto& p : partial) {
    t.nll += p.nll;
    for (std::size_t a = 0; a < d; ++a) t.grad[a] += p.grad[a];
    for (std::size_t a = 0; a < d * d; ++a) t.hess[a] += p.hess[a];
  }
  return t;
}

RejectionTally tally_rejections(std::span<const double> signal,
                                std::span<const std::uint8_t> unanswerable, Comparator cmp,
                                double threshold) {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  const auto n = static_cast<std::int64_t>(signal.size());
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, fn, tn) if (n > 4096)
  for (std::int64_t i = 0; i < n; ++i) {
    const double s = signal[static_cast<std::size_t>(i)];
    const bool rejected = cmp == Comparator::kLessThan ? s < threshold : s > threshold;
    if (unanswerable[static_cast<std::size_t>(i)]) {
      if (rejected) ++tp; else ++fn;
    } else {
      if (rejected) ++fp; else ++tn;
    }
  }
  return {tp, fp, fn, tn};
}

std::vector<std::size_t> segment_argmax(const Segments& segments) {
  const auto n = static_cast<std::int64_t>(segments.count());
  std::vector<std::size_t> out(segments.count(), std::numeric_limits<std::size_t>::max());
#pragma omp parallel for schedule(static) if (n > 1024)
  for (std::int64_t k = 0; k < n; ++k) {
    const std::size_t begin = segments.offsets[static_cast<std::size_t>(k)];
    const std::size_t end = segments.offsets[static_cast<std::size_t>(k) + 1];
    if (begin == end) continue;
    std::size_t best = begin;
    for (std::size_t i = begin + 1; i < end; ++i)
      if (segments.values[i] > segments.values[best]) best = i;
    out[static_cast<std::size_t>(k)] = best - begin;
  }
  return out;
}

}  // namespace parallel
}  // namespace contrarank::kernels
