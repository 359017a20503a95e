#include "kernels_detail.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace seqot::kernels {

namespace omp {

void cost_matrix(const CostArgs& a, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(a.x.size() / a.dim);
  const std::size_t cols = a.y.size() / a.dim;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    detail::cost_row(a, r, cols, out.data() + r * cols);
  }
}

void row_logsumexp(const SoftminArgs& a, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) out[static_cast<std::size_t>(i)] = detail::logsumexp_row(a, static_cast<std::size_t>(i));
}

void entropic_map(const EntropicMapArgs& a, std::span<double> out) {
  const auto nq = static_cast<std::ptrdiff_t>(a.queries.size() / a.dim);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < nq; ++q) {
    const auto r = static_cast<std::size_t>(q);
    detail::entropic_map_row(a, r, out.data() + r * a.dim);
  }
}

}  // namespace omp

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace seqot::kernels
