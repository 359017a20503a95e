#include "seqot/measures.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace seqot {

namespace {

constexpr double kWeightSumTol = 1e-12;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> coords,
                                 std::vector<double> weights)
    : dim_(dim) {
  require(dim > 0, "DiscreteMeasure: dim must be positive");
  require(!weights.empty(), "DiscreteMeasure: empty support");
  require(coords.size() == weights.size() * dim,
          "DiscreteMeasure: coordinate count does not match weights * dim");
  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "DiscreteMeasure: negative or non-finite weight");
    total += w;
  }
  for (double c : coords) require(std::isfinite(c), "DiscreteMeasure: non-finite coordinate");
  require(total > 0.0, "DiscreteMeasure: total mass is zero");

  coords_.reserve(coords.size());
  weights_.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i] / total;
    if (w < kPruneThreshold) continue;
    weights_.push_back(w);
    coords_.insert(coords_.end(), coords.begin() + static_cast<std::ptrdiff_t>(i * dim),
                   coords.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  }
  const double kept = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(kept - 1.0) > kWeightSumTol / 10)
    for (double& w : weights_) w /= kept;
}

DiscreteMeasure DiscreteMeasure::from_points(const std::vector<std::vector<double>>& points,
                                             std::vector<double> weights) {
  require(!points.empty(), "DiscreteMeasure: empty point list");
  require(points.size() == weights.size(), "DiscreteMeasure: points/weights size mismatch");
  const std::size_t dim = points.front().size();
  std::vector<double> coords;
  coords.reserve(points.size() * dim);
  for (const auto& p : points) {
    require(p.size() == dim, "DiscreteMeasure: inconsistent point dimensions");
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return DiscreteMeasure(dim, std::move(coords), std::move(weights));
}

DiscreteMeasure DiscreteMeasure::dirac(std::vector<double> point) {
  const std::size_t dim = point.size();
  return DiscreteMeasure(dim, std::move(point), {1.0});
}

DiscreteMeasure DiscreteMeasure::mix(const DiscreteMeasure& other, double alpha) const {
  require(dim_ == other.dim_, "mix: dimension mismatch");
  require(alpha >= 0.0 && alpha <= 1.0, "mix: alpha outside [0,1]");
  std::vector<double> coords = coords_;
  coords.insert(coords.end(), other.coords_.begin(), other.coords_.end());
  std::vector<double> weights;
  weights.reserve(size() + other.size());
  for (double w : weights_) weights.push_back(alpha * w);
  for (double w : other.weights_) weights.push_back((1.0 - alpha) * w);
  return DiscreteMeasure(dim_, std::move(coords), std::move(weights));
}

DiscreteMeasure DiscreteMeasure::merged() const {
  std::map<std::vector<double>, std::size_t> index;
  std::vector<double> coords;
  std::vector<double> weights;
  for (std::size_t i = 0; i < size(); ++i) {
    auto p = point(i);
    std::vector<double> key(p.begin(), p.end());
    auto [it, inserted] = index.emplace(std::move(key), weights.size());
    if (inserted) {
      coords.insert(coords.end(), p.begin(), p.end());
      weights.push_back(weights_[i]);
    } else {
      weights[it->second] += weights_[i];
    }
  }
  return DiscreteMeasure(dim_, std::move(coords), std::move(weights));
}

DiscreteMeasure empirical_from_samples(const std::vector<std::vector<double>>& samples) {
  require(!samples.empty(), "empirical_from_samples: empty sample list");
  return DiscreteMeasure::from_points(samples, std::vector<double>(samples.size(), 1.0));
}

double moment(const DiscreteMeasure& m, std::size_t coordinate, int order) {
  if (coordinate >= m.dim()) throw std::out_of_range("moment: coordinate out of range");
  require(order > 0, "moment: order must be positive");
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) s += m.weight(k) * std::pow(m.point(k)[coordinate], order);
  return s;
}

std::vector<double> mean(const DiscreteMeasure& m) {
  std::vector<double> out(m.dim(), 0.0);
  for (std::size_t k = 0; k < m.size(); ++k) {
    auto p = m.point(k);
    for (std::size_t i = 0; i < m.dim(); ++i) out[i] += m.weight(k) * p[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussians

GaussianSpec::GaussianSpec(std::vector<double> mean_, std::vector<double> covariance_)
    : mean(std::move(mean_)), covariance(std::move(covariance_)) {
  const std::size_t d = mean.size();
  require(d > 0, "GaussianSpec: empty mean");
  require(covariance.size() == d * d, "GaussianSpec: covariance must be dim x dim");
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j)
      require(std::abs(covariance[i * d + j] - covariance[j * d + i]) <= 1e-12,
              "GaussianSpec: covariance not symmetric");
  Eigen::Map<const Eigen::MatrixXd> c(covariance.data(), static_cast<Eigen::Index>(d),
                                      static_cast<Eigen::Index>(d));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() > 0.0, "GaussianSpec: covariance not positive definite");
}

GaussianSpec GaussianSpec::isotropic(std::vector<double> mean, double variance) {
  const std::size_t d = mean.size();
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) cov[i * d + i] = variance;
  return GaussianSpec(std::move(mean), std::move(cov));
}

GaussianSpec GaussianSpec::diagonal(std::vector<double> mean, const std::vector<double>& variances) {
  const std::size_t d = mean.size();
  require(variances.size() == d, "GaussianSpec: variance count mismatch");
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) cov[i * d + i] = variances[i];
  return GaussianSpec(std::move(mean), std::move(cov));
}

namespace {

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double gaussian_w2(const GaussianSpec& a, const GaussianSpec& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("gaussian_w2: dimension mismatch");
  const auto d = static_cast<Eigen::Index>(a.dim());
  Eigen::Map<const Eigen::VectorXd> ma(a.mean.data(), d), mb(b.mean.data(), d);
  Eigen::Map<const Eigen::MatrixXd> ca(a.covariance.data(), d, d), cb(b.covariance.data(), d, d);
  const Eigen::MatrixXd ra = sqrtm_psd(ca);
  Eigen::MatrixXd inner = ra * cb * ra;
  inner = 0.5 * (inner + inner.transpose());
  const Eigen::MatrixXd cross = sqrtm_psd(inner);
  const double bures = ca.trace() + cb.trace() - 2.0 * cross.trace();
  return (ma - mb).squaredNorm() + std::max(bures, 0.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_quantile(double u) {
  if (u <= 0.0) return -std::numeric_limits<double>::infinity();
  if (u >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

// ---------------------------------------------------------------------------
// Grid1D

namespace {

double trapezoid_total(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
  return s;
}

void check_grid_shape(const std::vector<double>& nodes, const std::vector<double>& density) {
  require(nodes.size() >= 2, "Grid1D: need at least two nodes");
  require(nodes.size() == density.size(), "Grid1D: nodes/density size mismatch");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    require(nodes[i] < nodes[i + 1], "Grid1D: nodes must be strictly increasing");
  for (double f : density) require(std::isfinite(f) && f >= 0.0, "Grid1D: negative density");
}

}  // namespace

Grid1D::Grid1D(std::vector<double> nodes, std::vector<double> density)
    : nodes_(std::move(nodes)), density_(std::move(density)) {
  check_grid_shape(nodes_, density_);
  require(std::abs(trapezoid_total(nodes_, density_) - 1.0) <= 1e-9,
          "Grid1D: density does not integrate to 1");
}

Grid1D Grid1D::normalized(std::vector<double> nodes, std::vector<double> density) {
  check_grid_shape(nodes, density);
  const double total = trapezoid_total(nodes, density);
  require(total > 0.0, "Grid1D: degenerate grid (zero mass)");
  for (double& f : density) f /= total;
  return Grid1D(std::move(nodes), std::move(density));
}

Grid1D Grid1D::tabulate(const std::function<double(double)>& density, double lo, double hi,
                        std::size_t num_nodes) {
  require(hi > lo && num_nodes >= 2, "Grid1D::tabulate: bad range");
  std::vector<double> x(num_nodes), f(num_nodes);
  const double h = (hi - lo) / static_cast<double>(num_nodes - 1);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    x[i] = lo + h * static_cast<double>(i);
    f[i] = density(x[i]);
  }
  x.back() = hi;
  return normalized(std::move(x), std::move(f));
}

double Grid1D::density_at(double x) const {
  if (x < nodes_.front() || x > nodes_.back()) return 0.0;
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  if (it == nodes_.end()) return density_.back();
  const auto j = static_cast<std::size_t>(it - nodes_.begin());
  const std::size_t i = j - 1;
  const double t = (x - nodes_[i]) / (nodes_[j] - nodes_[i]);
  return (1.0 - t) * density_[i] + t * density_[j];
}

std::vector<double> Grid1D::cdf() const {
  std::vector<double> c(nodes_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
    c[i + 1] = c[i] + 0.5 * (density_[i] + density_[i + 1]) * (nodes_[i + 1] - nodes_[i]);
  return c;
}

std::vector<double> Grid1D::survival() const {
  std::vector<double> s(nodes_.size(), 0.0);
  for (std::size_t i = nodes_.size() - 1; i > 0; --i)
    s[i - 1] = s[i] + 0.5 * (density_[i] + density_[i - 1]) * (nodes_[i] - nodes_[i - 1]);
  return s;
}

double Grid1D::expectation(const std::function<double(double)>& h) const {
  double s = 0.0;
  double prev = h(nodes_[0]) * density_[0];
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const double next = h(nodes_[i + 1]) * density_[i + 1];
    s += 0.5 * (prev + next) * (nodes_[i + 1] - nodes_[i]);
    prev = next;
  }
  return s;
}

Grid1D gaussian_grid(const Gaussian1D& g, double lo, double hi, std::size_t num_nodes) {
  return Grid1D::tabulate([&](double x) { return normal_pdf((x - g.mean) / g.sd) / g.sd; }, lo, hi,
                          num_nodes);
}

// ---------------------------------------------------------------------------
// GridCdf

GridCdf::GridCdf(const Grid1D& g) : x_(g.nodes()), f_(g.density()) {
  const std::size_t n = x_.size();
  cdf_.assign(n, 0.0);
  m1_.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = x_[i + 1] - x_[i];
    cdf_[i + 1] = cdf_[i] + partial_mass(i, h);
    m1_[i + 1] = m1_[i] + partial_moment(i, h);
  }
  total_ = n ? cdf_.back() : 0.0;
  if (!(total_ > 0.0)) throw std::invalid_argument("GridCdf: degenerate grid");
}

double GridCdf::partial_mass(std::size_t i, double t) const {
  const double slope = (f_[i + 1] - f_[i]) / (x_[i + 1] - x_[i]);
  return f_[i] * t + 0.5 * slope * t * t;
}

double GridCdf::partial_moment(std::size_t i, double t) const {
  const double slope = (f_[i + 1] - f_[i]) / (x_[i + 1] - x_[i]);
  return x_[i] * partial_mass(i, t) + 0.5 * f_[i] * t * t + slope * t * t * t / 3.0;
}

double GridCdf::operator()(double x) const {
  if (x <= x_.front()) return 0.0;
  if (x >= x_.back()) return 1.0;
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
  return (cdf_[i] + partial_mass(i, x - x_[i])) / total_;
}

double GridCdf::inverse(double u) const {
  const double target = u * total_;
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), target);
  if (it == cdf_.begin()) return x_.front();
  if (it == cdf_.end()) return x_.back();
  const auto i = static_cast<std::size_t>(it - cdf_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double slope = (f_[i + 1] - f_[i]) / h;
  const double delta = target - cdf_[i];
  const double disc = std::max(f_[i] * f_[i] + 2.0 * slope * delta, 0.0);
  const double denom = f_[i] + std::sqrt(disc);
  const double t = denom > 0.0 ? 2.0 * delta / denom : h;
  return x_[i] + std::clamp(t, 0.0, h);
}

double GridCdf::first_moment(double x) const {
  if (x <= x_.front()) return 0.0;
  if (x >= x_.back()) return m1_.back();
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
  return m1_[i] + partial_moment(i, x - x_[i]);
}

// ---------------------------------------------------------------------------
// Quantiles

Quantile1D::Quantile1D(std::vector<double> grid_, std::vector<double> values_,
                       std::vector<double> masses_)
    : grid(std::move(grid_)), values(std::move(values_)), masses(std::move(masses_)) {
  require(!grid.empty(), "Quantile1D: empty grid");
  require(grid.size() == values.size() && grid.size() == masses.size(),
          "Quantile1D: grid/values/masses size mismatch");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    require(grid[k] > 0.0 && grid[k] < 1.0, "Quantile1D: grid outside (0,1)");
    require(masses[k] > 0.0, "Quantile1D: non-positive cell mass");
    require(std::isfinite(values[k]), "Quantile1D: non-finite value");
    if (k > 0) {
      require(grid[k - 1] < grid[k], "Quantile1D: grid must be strictly increasing");
      require(values[k - 1] <= values[k], "Quantile1D: values must be nondecreasing");
    }
  }
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  require(std::abs(total - 1.0) <= 1e-9, "Quantile1D: cell masses must sum to 1");
}

Quantile1D Quantile1D::uniform(std::vector<double> values) {
  const std::size_t r = values.size();
  std::vector<double> grid(r), masses(r, 1.0 / static_cast<double>(r));
  for (std::size_t k = 0; k < r; ++k) grid[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(r);
  return Quantile1D(std::move(grid), std::move(values), std::move(masses));
}

std::vector<double> Quantile1D::cell_edges() const {
  std::vector<double> edges(masses.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    acc += masses[k];
    edges[k] = acc;
  }
  edges.back() = 1.0;
  return edges;
}

bool Quantile1D::same_cells(const Quantile1D& other, double tol) const {
  if (size() != other.size()) return false;
  for (std::size_t k = 0; k < size(); ++k)
    if (std::abs(masses[k] - other.masses[k]) > tol) return false;
  return true;
}

namespace {

void enforce_monotone(std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) v[k] = std::max(v[k], v[k - 1]);
}

}  // namespace

Quantile1D quantile_from_grid(const Grid1D& g, std::size_t resolution, QuantileSampling sampling) {
  require(resolution >= 2, "quantile_from_grid: resolution must be >= 2");
  const GridCdf lin(g);
  const double r = static_cast<double>(resolution);
  std::vector<double> values(resolution);
  if (sampling == QuantileSampling::midpoint) {
    for (std::size_t k = 0; k < resolution; ++k)
      values[k] = lin.inverse((static_cast<double>(k) + 0.5) / r);
  } else {
    double x_prev = g.lo();
    double m_prev = 0.0;
    for (std::size_t k = 0; k < resolution; ++k) {
      const double x_next = k + 1 == resolution ? g.hi() : lin.inverse((static_cast<double>(k) + 1.0) / r);
      const double m_next = lin.first_moment(x_next);
      values[k] = (m_next - m_prev) * r / lin.total();
      values[k] = std::clamp(values[k], x_prev, x_next);
      x_prev = x_next;
      m_prev = m_next;
    }
  }
  enforce_monotone(values);
  return Quantile1D::uniform(std::move(values));
}

Quantile1D quantile_from_discrete(const DiscreteMeasure& m) {
  require(m.dim() == 1, "quantile_from_discrete: measure must be one-dimensional");
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return m.point(a)[0] < m.point(b)[0]; });
  std::vector<double> grid, values, masses;
  double acc = 0.0;
  for (std::size_t k : order) {
    const double w = m.weight(k);
    grid.push_back(acc + 0.5 * w);
    values.push_back(m.point(k)[0]);
    masses.push_back(w);
    acc += w;
  }
  return Quantile1D(std::move(grid), std::move(values), std::move(masses));
}

Quantile1D quantile_from_gaussian(const Gaussian1D& g, std::size_t resolution,
                                  QuantileSampling sampling) {
  require(resolution >= 2, "quantile_from_gaussian: resolution must be >= 2");
  require(g.sd > 0.0, "quantile_from_gaussian: sd must be positive");
  const double r = static_cast<double>(resolution);
  std::vector<double> values(resolution);
  if (sampling == QuantileSampling::midpoint) {
    for (std::size_t k = 0; k < resolution; ++k)
      values[k] = g.mean + g.sd * normal_quantile((static_cast<double>(k) + 0.5) / r);
  } else {
    // E[Z | a < Z < b] = (pdf(a) - pdf(b)) / (Phi(b) - Phi(a))
    double pdf_prev = 0.0;
    for (std::size_t k = 0; k < resolution; ++k) {
      const double pdf_next =
          k + 1 == resolution ? 0.0 : normal_pdf(normal_quantile((static_cast<double>(k) + 1.0) / r));
      values[k] = g.mean + g.sd * (pdf_prev - pdf_next) * r;
      pdf_prev = pdf_next;
    }
  }
  enforce_monotone(values);
  return Quantile1D::uniform(std::move(values));
}

Quantile1D to_quantile(const Marginal1D& m, std::size_t resolution, QuantileSampling sampling) {
  struct Visitor {
    std::size_t resolution;
    QuantileSampling sampling;
    Quantile1D operator()(const Gaussian1D& g) const {
      return quantile_from_gaussian(g, resolution, sampling);
    }
    Quantile1D operator()(const Grid1D& g) const { return quantile_from_grid(g, resolution, sampling); }
    Quantile1D operator()(const DiscreteMeasure& d) const { return quantile_from_discrete(d); }
  };
  return std::visit(Visitor{resolution, sampling}, m);
}

}  // namespace seqot
