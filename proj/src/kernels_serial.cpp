#include "kernels_detail.hpp"

namespace seqot::kernels::serial {

void cost_matrix(const CostArgs& a, std::span<double> out) {
  const std::size_t rows = a.x.size() / a.dim;
  const std::size_t cols = a.y.size() / a.dim;
  for (std::size_t i = 0; i < rows; ++i) detail::cost_row(a, i, cols, out.data() + i * cols);
}

void row_logsumexp(const SoftminArgs& a, std::span<double> out) {
  for (std::size_t i = 0; i < a.rows; ++i) out[i] = detail::logsumexp_row(a, i);
}

void entropic_map(const EntropicMapArgs& a, std::span<double> out) {
  const std::size_t nq = a.queries.size() / a.dim;
  for (std::size_t q = 0; q < nq; ++q) detail::entropic_map_row(a, q, out.data() + q * a.dim);
}

}  // namespace seqot::kernels::serial
