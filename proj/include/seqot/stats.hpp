#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace seqot::stats {

/// One step of the splitmix64 generator; used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of substream `index` of a master seed.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a(std::string_view bytes);

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Sample mean with the i.i.d. standard error sd / sqrt(n).
MeanEstimate mean_iid(std::span<const double> x);

/// Sample mean with a batch-means standard error. Batches of `batch_size`
/// consecutive values (default floor(sqrt(n))); a trailing partial batch
/// enters the mean but not the error estimate.
MeanEstimate mean_batch(std::span<const double> x, std::size_t batch_size = 0);

/// Delete-one-batch jackknife of f(mean of series_1, ..., mean of series_k)
/// for series of equal length. Returns the full-sample value of f and its
/// jackknife standard error.
MeanEstimate jackknife_of_means(const std::vector<std::span<const double>>& series,
                                const std::function<double(std::span<const double>)>& f,
                                std::size_t batch_size = 0);

/// log(mean(exp(x))) evaluated with a max shift.
double log_mean_exp(std::span<const double> x);

/// Effective sample size of a stationary series by batch means.
double effective_sample_size(std::span<const double> x, std::size_t batch_size = 0);

}  // namespace seqot::stats
