#pragma once

// Dense data-parallel kernels used by the solvers.
//
// Every kernel exists twice: `serial::` is the reference implementation and
// `omp::` splits the outer loop across OpenMP threads. The inner reductions
// run in the same order in both, so the two produce bitwise-identical output
// regardless of thread count; tests/test_kernels.cpp checks this.

#include <cstddef>
#include <span>

namespace seqot {

enum class Backend { serial, parallel };

enum class CostKind {
  squared_euclidean,   ///< |x - y|^2
  squared_coordinate,  ///< (x_i - y_i)^2 for one fixed coordinate i
};

namespace kernels {

struct CostArgs {
  std::span<const double> x;  ///< rows * dim
  std::span<const double> y;  ///< cols * dim
  std::size_t dim = 0;
  CostKind kind = CostKind::squared_euclidean;
  std::size_t coordinate = 0;
};

/// Row-wise log-sum-exp of (offset_j - cost_ij * inv_eps) over j.
struct SoftminArgs {
  const double* cost = nullptr;  ///< rows x cols, row-major
  std::size_t rows = 0;
  std::size_t cols = 0;
  const double* offset = nullptr;  ///< length cols
  double inv_eps = 1.0;
};

/// Barycentric projection of query points through Gibbs weights
///   w_j(x) ~ exp(offset_j - c(x, y_j) * inv_eps).
struct EntropicMapArgs {
  std::span<const double> queries;  ///< nq * dim
  std::span<const double> targets;  ///< nt * dim
  std::size_t dim = 0;
  std::span<const double> offset;  ///< length nt
  double inv_eps = 1.0;
};

namespace serial {
void cost_matrix(const CostArgs& a, std::span<double> out);
void row_logsumexp(const SoftminArgs& a, std::span<double> out);
void entropic_map(const EntropicMapArgs& a, std::span<double> out);
}  // namespace serial

namespace omp {
void cost_matrix(const CostArgs& a, std::span<double> out);
void row_logsumexp(const SoftminArgs& a, std::span<double> out);
void entropic_map(const EntropicMapArgs& a, std::span<double> out);
}  // namespace omp

inline void cost_matrix(Backend b, const CostArgs& a, std::span<double> out) {
  b == Backend::serial ? serial::cost_matrix(a, out) : omp::cost_matrix(a, out);
}
inline void row_logsumexp(Backend b, const SoftminArgs& a, std::span<double> out) {
  b == Backend::serial ? serial::row_logsumexp(a, out) : omp::row_logsumexp(a, out);
}
inline void entropic_map(Backend b, const EntropicMapArgs& a, std::span<double> out) {
  b == Backend::serial ? serial::entropic_map(a, out) : omp::entropic_map(a, out);
}

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace kernels
}  // namespace seqot
