#include "seqot/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace seqot::stats {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::size_t default_batch(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) batch_size = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  return std::clamp<std::size_t>(batch_size, 1, std::max<std::size_t>(n, 1));
}

}  // namespace

MeanEstimate mean_iid(std::span<const double> x) {
  MeanEstimate e;
  e.samples = x.size();
  if (x.empty()) return e;
  e.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  if (x.size() < 2) return e;
  double ss = 0.0;
  for (double v : x) ss += (v - e.mean) * (v - e.mean);
  e.standard_error = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return e;
}

MeanEstimate mean_batch(std::span<const double> x, std::size_t batch_size) {
  MeanEstimate e;
  e.samples = x.size();
  if (x.empty()) return e;
  e.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const std::size_t b = default_batch(x.size(), batch_size);
  const std::size_t batches = x.size() / b;
  if (batches < 2) return mean_iid(x);
  std::vector<double> means(batches);
  for (std::size_t k = 0; k < batches; ++k)
    means[k] = std::accumulate(x.begin() + static_cast<std::ptrdiff_t>(k * b),
                               x.begin() + static_cast<std::ptrdiff_t>((k + 1) * b), 0.0) /
               static_cast<double>(b);
  const double mb = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
  double ss = 0.0;
  for (double m : means) ss += (m - mb) * (m - mb);
  e.standard_error = std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
  return e;
}

MeanEstimate jackknife_of_means(const std::vector<std::span<const double>>& series,
                                const std::function<double(std::span<const double>)>& f, std::size_t batch_size) {
  if (series.empty()) throw std::invalid_argument("jackknife: no series");
  const std::size_t n = series.front().size();
  for (const auto& s : series)
    if (s.size() != n) throw std::invalid_argument("jackknife: series lengths differ");
  MeanEstimate e;
  e.samples = n;
  if (n == 0) return e;
  const std::size_t k = series.size();
  const std::size_t b = default_batch(n, batch_size);
  const std::size_t batches = n / b;
  const std::size_t used = batches * b;

  std::vector<double> totals(k, 0.0), full(k);
  std::vector<double> batch_sums(batches * k, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t i = 0; i < n; ++i) totals[s] += series[s][i];
    full[s] = totals[s] / static_cast<double>(n);
    for (std::size_t q = 0; q < batches; ++q)
      for (std::size_t i = q * b; i < (q + 1) * b; ++i) batch_sums[q * k + s] += series[s][i];
  }
  e.mean = f(full);
  if (batches < 2) return e;

  std::vector<double> theta(batches), means(k);
  for (std::size_t q = 0; q < batches; ++q) {
    for (std::size_t s = 0; s < k; ++s) {
      // leave out batch q; the trailing partial batch always stays in
      const double tail = totals[s] - std::accumulate(series[s].begin(), series[s].begin() +
                                                      static_cast<std::ptrdiff_t>(used), 0.0);
      double sum = tail;
      for (std::size_t r = 0; r < batches; ++r)
        if (r != q) sum += batch_sums[r * k + s];
      means[s] = sum / static_cast<double>(n - b);
    }
    theta[q] = f(means);
  }
  const double tb = std::accumulate(theta.begin(), theta.end(), 0.0) / static_cast<double>(batches);
  double ss = 0.0;
  for (double t : theta) ss += (t - tb) * (t - tb);
  e.standard_error = std::sqrt(ss * static_cast<double>(batches - 1) / static_cast<double>(batches));
  return e;
}

double log_mean_exp(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("log_mean_exp: empty input");
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - mx);
  return mx + std::log(acc / static_cast<double>(x.size()));
}

double effective_sample_size(std::span<const double> x, std::size_t batch_size) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const MeanEstimate iid = mean_iid(x);
  const MeanEstimate bm = mean_batch(x, batch_size);
  if (!(bm.standard_error > 0.0)) return static_cast<double>(n);
  const double ratio = iid.standard_error / bm.standard_error;
  return std::min(static_cast<double>(n), static_cast<double>(n) * ratio * ratio);
}

}  // namespace seqot::stats
