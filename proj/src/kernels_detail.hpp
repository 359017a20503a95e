#pragma once

// Per-row bodies shared by the serial and OpenMP kernels. Keeping a single
// definition is what makes the two backends agree bit for bit.

#include <algorithm>
#include <cmath>
#include <limits>

#include "seqot/kernels.hpp"

namespace seqot::kernels::detail {

inline double pair_cost(const CostArgs& a, std::size_t i, std::size_t j) {
  const double* x = a.x.data() + i * a.dim;
  const double* y = a.y.data() + j * a.dim;
  if (a.kind == CostKind::squared_coordinate) {
    const double d = x[a.coordinate] - y[a.coordinate];
    return d * d;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.dim; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

inline void cost_row(const CostArgs& a, std::size_t i, std::size_t cols, double* out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = pair_cost(a, i, j);
}

inline double logsumexp_row(const SoftminArgs& a, std::size_t i) {
  const double* c = a.cost + i * a.cols;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < a.cols; ++j) mx = std::max(mx, a.offset[j] - c[j] * a.inv_eps);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t j = 0; j < a.cols; ++j) s += std::exp(a.offset[j] - c[j] * a.inv_eps - mx);
  return mx + std::log(s);
}

inline void entropic_map_row(const EntropicMapArgs& a, std::size_t q, double* out) {
  const std::size_t nt = a.offset.size();
  const double* x = a.queries.data() + q * a.dim;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nt; ++j) {
    const double* y = a.targets.data() + j * a.dim;
    double c = 0.0;
    for (std::size_t k = 0; k < a.dim; ++k) c += (x[k] - y[k]) * (x[k] - y[k]);
    mx = std::max(mx, a.offset[j] - c * a.inv_eps);
  }
  double norm = 0.0;
  std::fill(out, out + a.dim, 0.0);
  for (std::size_t j = 0; j < nt; ++j) {
    const double* y = a.targets.data() + j * a.dim;
    double c = 0.0;
    for (std::size_t k = 0; k < a.dim; ++k) c += (x[k] - y[k]) * (x[k] - y[k]);
    const double w = std::exp(a.offset[j] - c * a.inv_eps - mx);
    norm += w;
    for (std::size_t k = 0; k < a.dim; ++k) out[k] += w * y[k];
  }
  for (std::size_t k = 0; k < a.dim; ++k) out[k] /= norm;
}

}  // namespace seqot::kernels::detail
