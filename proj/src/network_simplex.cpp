#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "seqot/error.hpp"
#include "seqot/lp.hpp"

namespace seqot::lp {

namespace {

// Transportation network: sources 0..m-1, sinks m..m+n-1, root m+n.
// Arc a < m*n is (a / n) -> m + (a % n). Arc m*n + k is the artificial arc
// joining node k to the root; it points toward the root when it starts with
// positive flow and away from it otherwise, so the initial tree is strongly
// feasible.
class TransportNetwork {
 public:
  TransportNetwork(std::span<const double> supply, std::span<const double> demand,
                   std::span<const double> cost)
      : m_(supply.size()), n_(demand.size()), cost_(cost) {
    nodes_ = m_ + n_ + 1;
    root_ = m_ + n_;
    real_arcs_ = m_ * n_;
    const std::size_t total_arcs = real_arcs_ + m_ + n_;
    flow_.assign(total_arcs, 0.0);
    toward_root_.assign(m_ + n_, false);
    slot_.assign(total_arcs, kNone);

    double max_cost = 0.0;
    for (double c : cost) max_cost = std::max(max_cost, std::abs(c));
    big_ = (max_cost + 1.0) * static_cast<double>(nodes_);
    rc_tol_ = 1e-12 * (max_cost + 1.0);

    basis_.reserve(m_ + n_);
    for (std::size_t k = 0; k < m_ + n_; ++k) {
      const double s = k < m_ ? supply[k] : demand[k - m_];
      const std::size_t arc = real_arcs_ + k;
      toward_root_[k] = k < m_ && s > 0.0;
      flow_[arc] = s;
      slot_[arc] = basis_.size();
      basis_.push_back(arc);
    }

    parent_.assign(nodes_, kNone);
    parent_arc_.assign(nodes_, kNone);
    depth_.assign(nodes_, 0);
    pot_.assign(nodes_, 0.0);
    adj_start_.assign(nodes_ + 1, 0);
    adj_.assign(2 * (m_ + n_), 0);
    block_ = std::max<std::size_t>(16, static_cast<std::size_t>(std::sqrt(static_cast<double>(real_arcs_))));
  }

  std::size_t run(std::size_t max_iterations) {
    std::size_t it = 0;
    for (;; ++it) {
      if (it >= max_iterations) throw SolverError("network simplex: iteration limit reached");
      build_tree();
      const std::size_t entering = price();
      if (entering == kNone) break;
      pivot(entering);
    }
    return it;
  }

  double flow(std::size_t arc) const { return flow_[arc]; }
  double potential(std::size_t node) const { return pot_[node]; }
  std::size_t real_arcs() const { return real_arcs_; }
  std::size_t m() const { return m_; }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t tail(std::size_t arc) const {
    if (arc < real_arcs_) return arc / n_;
    const std::size_t k = arc - real_arcs_;
    return toward_root_[k] ? k : root_;
  }
  std::size_t head(std::size_t arc) const {
    if (arc < real_arcs_) return m_ + arc % n_;
    const std::size_t k = arc - real_arcs_;
    return toward_root_[k] ? root_ : k;
  }
  double arc_cost(std::size_t arc) const { return arc < real_arcs_ ? cost_[arc] : big_; }

  void build_tree() {
    std::fill(adj_start_.begin(), adj_start_.end(), 0);
    for (std::size_t arc : basis_) {
      ++adj_start_[tail(arc) + 1];
      ++adj_start_[head(arc) + 1];
    }
    std::partial_sum(adj_start_.begin(), adj_start_.end(), adj_start_.begin());
    fill_.assign(adj_start_.begin(), adj_start_.end() - 1);
    for (std::size_t arc : basis_) {
      adj_[fill_[tail(arc)]++] = arc;
      adj_[fill_[head(arc)]++] = arc;
    }
    stack_.clear();
    stack_.push_back(root_);
    parent_[root_] = kNone;
    parent_arc_[root_] = kNone;
    depth_[root_] = 0;
    pot_[root_] = 0.0;
    while (!stack_.empty()) {
      const std::size_t u = stack_.back();
      stack_.pop_back();
      for (std::size_t k = adj_start_[u]; k < adj_start_[u + 1]; ++k) {
        const std::size_t arc = adj_[k];
        if (arc == parent_arc_[u]) continue;
        const std::size_t t = tail(arc), h = head(arc);
        const std::size_t w = t == u ? h : t;
        parent_[w] = u;
        parent_arc_[w] = arc;
        depth_[w] = depth_[u] + 1;
        // basic arcs have zero reduced cost: c + pot[tail] - pot[head] = 0
        pot_[w] = t == u ? pot_[u] + arc_cost(arc) : pot_[u] - arc_cost(arc);
        stack_.push_back(w);
      }
    }
  }

  double reduced_cost(std::size_t arc) const {
    return arc_cost(arc) + pot_[tail(arc)] - pot_[head(arc)];
  }

  // Block search: scan blocks of arcs cyclically, return the most negative
  // reduced cost of the first block that contains one.
  std::size_t price() {
    std::size_t best = kNone;
    double best_rc = -rc_tol_;
    std::size_t scanned = 0;
    std::size_t in_block = 0;
    std::size_t a = next_;
    while (scanned < real_arcs_) {
      const double rc = cost_[a] + pot_[a / n_] - pot_[m_ + a % n_];
      if (rc < best_rc) {
        best_rc = rc;
        best = a;
      }
      ++scanned;
      ++in_block;
      if (++a == real_arcs_) a = 0;
      if (in_block == block_) {
        if (best != kNone) break;
        in_block = 0;
      }
    }
    next_ = a;
    return best;
  }

  void pivot(std::size_t entering) {
    const std::size_t p = tail(entering), q = head(entering);
    // climb to the apex of the cycle
    up_p_.clear();
    up_q_.clear();
    std::size_t a = p, b = q;
    while (depth_[a] > depth_[b]) {
      up_p_.push_back(a);
      a = parent_[a];
    }
    while (depth_[b] > depth_[a]) {
      up_q_.push_back(b);
      b = parent_[b];
    }
    while (a != b) {
      up_p_.push_back(a);
      up_q_.push_back(b);
      a = parent_[a];
      b = parent_[b];
    }

    // Cycle orientation follows the entering arc: apex -> ... -> p -> q -> ... -> apex.
    // Among the backward arcs the last one with minimal flow leaves.
    double delta = std::numeric_limits<double>::infinity();
    std::size_t leaving = kNone;
    auto consider = [&](std::size_t arc) {
      if (flow_[arc] <= delta) {
        delta = flow_[arc];
        leaving = arc;
      }
    };
    for (auto it = up_p_.rbegin(); it != up_p_.rend(); ++it) {
      const std::size_t arc = parent_arc_[*it];
      if (tail(arc) == *it) consider(arc);  // child -> parent, traversed parent -> child
    }
    for (std::size_t c : up_q_) {
      const std::size_t arc = parent_arc_[c];
      if (head(arc) == c) consider(arc);  // parent -> child, traversed child -> parent
    }
    if (leaving == kNone) throw SolverError("network simplex: unbounded cycle");

    if (delta > 0.0) {
      for (std::size_t c : up_p_) {
        const std::size_t arc = parent_arc_[c];
        flow_[arc] += tail(arc) == c ? -delta : delta;
      }
      for (std::size_t c : up_q_) {
        const std::size_t arc = parent_arc_[c];
        flow_[arc] += tail(arc) == c ? delta : -delta;
      }
      flow_[entering] += delta;
      for (std::size_t c : up_p_) clamp(parent_arc_[c]);
      for (std::size_t c : up_q_) clamp(parent_arc_[c]);
    }
    flow_[leaving] = 0.0;

    const std::size_t s = slot_[leaving];
    slot_[leaving] = kNone;
    basis_[s] = entering;
    slot_[entering] = s;
  }

  void clamp(std::size_t arc) {
    if (flow_[arc] < 0.0) flow_[arc] = 0.0;
  }

  std::size_t m_, n_, nodes_ = 0, root_ = 0, real_arcs_ = 0;
  std::span<const double> cost_;
  double big_ = 0.0, rc_tol_ = 0.0;
  std::vector<double> flow_;
  std::vector<bool> toward_root_;
  std::vector<std::size_t> basis_, slot_;
  std::vector<std::size_t> parent_, parent_arc_, depth_;
  std::vector<double> pot_;
  std::vector<std::size_t> adj_start_, adj_, fill_, stack_;
  std::vector<std::size_t> up_p_, up_q_;
  std::size_t block_ = 16, next_ = 0;
};

}  // namespace

TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                  std::span<const double> cost, std::size_t max_iterations) {
  const std::size_t m = supply.size(), n = demand.size();
  if (m == 0 || n == 0) throw std::invalid_argument("solve_transport: empty marginal");
  if (cost.size() != m * n) throw std::invalid_argument("solve_transport: cost table size mismatch");
  for (double s : supply)
    if (!(s >= 0.0)) throw std::invalid_argument("solve_transport: negative supply");
  for (double d : demand)
    if (!(d >= 0.0)) throw std::invalid_argument("solve_transport: negative demand");
  const double total_s = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double total_d = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (std::abs(total_s - total_d) > 1e-9 * std::max(1.0, total_s))
    throw SolverError("solve_transport: marginals carry different mass (" + std::to_string(total_s) +
                      " vs " + std::to_string(total_d) + ")");
  std::vector<double> scaled(demand.begin(), demand.end());
  for (double& d : scaled) d *= total_s / total_d;

  TransportNetwork net(supply, scaled, cost);
  if (max_iterations == 0) max_iterations = 100 * (m * n + m + n) + 10'000;
  TransportSolution sol;
  sol.iterations = net.run(max_iterations);

  for (std::size_t k = 0; k < m + n; ++k)
    if (net.flow(net.real_arcs() + k) > 1e-12 * std::max(1.0, total_s))
      throw SolverError("solve_transport: artificial arc carries flow; problem infeasible");

  sol.flow.resize(m * n);
  for (std::size_t a = 0; a < m * n; ++a) {
    sol.flow[a] = net.flow(a);
    sol.value += sol.flow[a] * cost[a];
  }
  sol.u.resize(m);
  sol.v.resize(n);
  for (std::size_t i = 0; i < m; ++i) sol.u[i] = -net.potential(i);
  for (std::size_t j = 0; j < n; ++j) sol.v[j] = net.potential(m + j);
  // Shift so that the first row potential is zero; it keeps magnitudes near
  // the cost scale when artificial arcs stay in the final tree.
  const double shift = sol.u[0];
  for (double& u : sol.u) u -= shift;
  for (double& v : sol.v) v += shift;
  return sol;
}

}  // namespace seqot::lp
