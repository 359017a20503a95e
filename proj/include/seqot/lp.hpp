#pragma once

// Linear-programming back ends.
//
//  * solve_transport: primal network simplex on the bipartite transportation
//    network, with a strongly feasible spanning tree so degenerate pivots
//    cannot cycle. It is the exact OT solver.
//  * solve_standard_form: dense two-phase tableau simplex for
//    min c.x s.t. A x = b, x >= 0. Used for the orbit-variable LP of
//    invariant transport and as the fallback/cross-check for transport.

#include <cstddef>
#include <span>
#include <vector>

namespace seqot::lp {

struct TransportSolution {
  std::vector<double> flow;  ///< rows x cols, row-major
  std::vector<double> u;     ///< row potentials
  std::vector<double> v;     ///< column potentials; u_i + v_j <= c_ij
  double value = 0.0;
  std::size_t iterations = 0;
};

/// min sum c_ij x_ij  s.t. row sums = supply, column sums = demand, x >= 0.
/// Supply and demand must carry the same total mass within 1e-9 (the demand
/// is rescaled onto the supply total); throws SolverError otherwise.
TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                  std::span<const double> cost, std::size_t max_iterations = 0);

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;
  std::vector<double> duals;  ///< one per constraint row; A^T y <= c
  double value = 0.0;
  std::size_t iterations = 0;
};

/// Dense matrix A is rows x cols, row-major.
LpSolution solve_standard_form(std::span<const double> a, std::size_t rows, std::size_t cols,
                               std::span<const double> b, std::span<const double> c,
                               std::size_t max_iterations = 1'000'000);

}  // namespace seqot::lp
