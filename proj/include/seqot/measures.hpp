#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace seqot {

/// Weighted point cloud in R^dim. Points are stored row-major in one flat
/// buffer. Weights are normalized on construction and atoms lighter than
/// kPruneThreshold are dropped; duplicate points are kept as separate atoms.
class DiscreteMeasure {
 public:
  static constexpr double kPruneThreshold = 1e-15;

  DiscreteMeasure() = default;
  DiscreteMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

  static DiscreteMeasure from_points(const std::vector<std::vector<double>>& points,
                                     std::vector<double> weights);
  static DiscreteMeasure dirac(std::vector<double> point);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& coords() const noexcept { return coords_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// alpha * this + (1 - alpha) * other, as the concatenation of both atom lists.
  DiscreteMeasure mix(const DiscreteMeasure& other, double alpha) const;

  /// Same measure with atoms at identical coordinates merged (first
  /// occurrence keeps its position in the list).
  DiscreteMeasure merged() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

DiscreteMeasure empirical_from_samples(const std::vector<std::vector<double>>& samples);

/// sum_k w_k * x_k[coordinate]^order
double moment(const DiscreteMeasure& m, std::size_t coordinate, int order);

/// Mean vector of a discrete measure.
std::vector<double> mean(const DiscreteMeasure& m);

struct GaussianSpec {
  std::vector<double> mean;
  std::vector<double> covariance;  // row-major dim x dim

  GaussianSpec() = default;
  GaussianSpec(std::vector<double> mean, std::vector<double> covariance);
  static GaussianSpec isotropic(std::vector<double> mean, double variance);
  static GaussianSpec diagonal(std::vector<double> mean, const std::vector<double>& variances);

  std::size_t dim() const noexcept { return mean.size(); }
  double cov(std::size_t i, std::size_t j) const { return covariance[i * dim() + j]; }
};

/// Squared Bures-Wasserstein distance
///   |m_a - m_b|^2 + tr(A + B - 2 (A^1/2 B A^1/2)^1/2).
double gaussian_w2(const GaussianSpec& a, const GaussianSpec& b);

/// Tabulated 1D density. Integrals use the trapezoid rule on the nodes,
/// i.e. the density is read as the piecewise-linear interpolant.
class Grid1D {
 public:
  Grid1D() = default;
  /// Requires a trapezoid integral equal to 1 within 1e-9.
  Grid1D(std::vector<double> nodes, std::vector<double> density);
  /// Rescales `density` so that it integrates to one.
  static Grid1D normalized(std::vector<double> nodes, std::vector<double> density);
  static Grid1D tabulate(const std::function<double(double)>& density, double lo, double hi,
                         std::size_t num_nodes);

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& density() const noexcept { return density_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  double lo() const { return nodes_.front(); }
  double hi() const { return nodes_.back(); }

  /// Linear interpolation of the density; 0 outside [lo, hi].
  double density_at(double x) const;
  /// Cumulative distribution at every node (left-to-right trapezoid sums).
  std::vector<double> cdf() const;
  /// Tail mass right of every node, accumulated right-to-left so that the
  /// upper tail keeps relative precision.
  std::vector<double> survival() const;
  /// Trapezoid integral of h(x) * density(x).
  double expectation(const std::function<double(double)>& h) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> density_;
};

/// Exact CDF of the piecewise-linear density of a grid, its inverse and its
/// first-moment primitive. Probabilities are normalized by the total mass.
class GridCdf {
 public:
  explicit GridCdf(const Grid1D& g);
  double operator()(double x) const;
  /// Smallest x with F(x) >= u.
  double inverse(double u) const;
  /// Unnormalized integral of y f(y) over (lo, x].
  double first_moment(double x) const;
  double total() const noexcept { return total_; }

 private:
  double partial_mass(std::size_t i, double t) const;
  double partial_moment(std::size_t i, double t) const;

  std::vector<double> x_;
  std::vector<double> f_;
  std::vector<double> cdf_;
  std::vector<double> m1_;
  double total_ = 0.0;
};

enum class QuantileSampling {
  midpoint,   ///< Q((k - 1/2) / R)
  cell_mean,  ///< conditional mean of X on the k-th quantile cell
};

/// Piecewise-constant quantile function. Cell k covers a probability
/// interval of length masses[k] centred at grid[k] and carries values[k].
struct Quantile1D {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> masses;

  Quantile1D() = default;
  Quantile1D(std::vector<double> grid, std::vector<double> values, std::vector<double> masses);
  /// Uniform cells (k - 1/2)/R.
  static Quantile1D uniform(std::vector<double> values);

  std::size_t size() const noexcept { return values.size(); }
  /// Right end of every cell in probability space.
  std::vector<double> cell_edges() const;
  bool same_cells(const Quantile1D& other, double tol = 1e-14) const;
};

/// Left-continuous generalized inverse of the grid CDF.
Quantile1D quantile_from_grid(const Grid1D& g, std::size_t resolution,
                              QuantileSampling sampling = QuantileSampling::midpoint);

/// Exact quantile function of a 1D discrete measure: one cell per atom, atoms
/// sorted by position with ties kept in index order.
Quantile1D quantile_from_discrete(const DiscreteMeasure& m);

struct Gaussian1D {
  double mean = 0.0;
  double sd = 1.0;
};

Quantile1D quantile_from_gaussian(const Gaussian1D& g, std::size_t resolution,
                                  QuantileSampling sampling = QuantileSampling::cell_mean);

double normal_cdf(double z);
double normal_quantile(double u);
double normal_pdf(double z);

/// A one-dimensional law in whichever representation the caller has.
using Marginal1D = std::variant<Gaussian1D, Grid1D, DiscreteMeasure>;

Quantile1D to_quantile(const Marginal1D& m, std::size_t resolution,
                       QuantileSampling sampling = QuantileSampling::cell_mean);

/// Tabulates a Gaussian on [lo, hi].
Grid1D gaussian_grid(const Gaussian1D& g, double lo = -10.0, double hi = 10.0,
                     std::size_t num_nodes = 10001);

}  // namespace seqot
