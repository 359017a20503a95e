#pragma once

#include <random>
#include <vector>

#include "seqot/measures.hpp"

namespace seqot::testing {

/// Random atoms in [-2, 2]^dim with weights in (0.05, 1], normalized.
inline DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t atoms, std::size_t dim) {
  std::uniform_real_distribution<double> pos(-2.0, 2.0), w(0.05, 1.0);
  std::vector<double> coords(atoms * dim), weights(atoms);
  for (double& c : coords) c = pos(rng);
  for (double& x : weights) x = w(rng);
  return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

inline std::vector<std::vector<double>> normal_samples(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                                                       double mean = 0.0, double sd = 1.0) {
  std::normal_distribution<double> z(mean, sd);
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& p : out)
    for (double& x : p) x = z(rng);
  return out;
}

/// Composite Simpson rule on [lo, hi] with an even number of panels; test
/// oracle independent of the trapezoid rule used by the library.
template <class F>
double simpson(F&& f, double lo, double hi, std::size_t panels = 20000) {
  if (panels % 2) ++panels;
  const double h = (hi - lo) / static_cast<double>(panels);
  double s = f(lo) + f(hi);
  for (std::size_t k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(lo + h * static_cast<double>(k));
  return s * h / 3.0;
}

}  // namespace seqot::testing
