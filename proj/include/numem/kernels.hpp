#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference
// (`*_serial`) and an OpenMP version (`*_parallel`). The OpenMP versions
// reduce over fixed-size blocks in block order, so their results do not
// depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "numem/prototypes.hpp"

namespace numem::kernels {

/// Number of samples per reduction block in the parallel kernels.
inline constexpr std::size_t kBlockSize = 4096;

/// Weighted sufficient statistics per component, centered on the current
/// component means: mass = sum r, shift1 = sum r (x - mu), shift2 = sum r (x - mu)^2.
struct MixtureStats {
  std::vector<double> mass;
  std::vector<double> shift1;
  std::vector<double> shift2;
  double log_likelihood = 0.0;

  explicit MixtureStats(std::size_t m = 0) : mass(m, 0.0), shift1(m, 0.0), shift2(m, 0.0) {}
  void add(const MixtureStats& other);
};

/// Soft E-step: posterior responsibilities.
MixtureStats soft_estep_serial(const GmmModel& model, std::span<const double> data);
MixtureStats soft_estep_parallel(const GmmModel& model, std::span<const double> data);

/// Hard E-step: one-hot max-posterior assignment (ties -> lowest index),
/// written to `assignment`.
MixtureStats hard_estep_serial(const GmmModel& model, std::span<const double> data,
                               std::span<std::uint32_t> assignment);
MixtureStats hard_estep_parallel(const GmmModel& model, std::span<const double> data,
                                 std::span<std::uint32_t> assignment);

double log_likelihood_serial(const GmmModel& model, std::span<const double> data);
double log_likelihood_parallel(const GmmModel& model, std::span<const double> data);

/// out[i*C + c] = <queries[i], keys[c]> - query_scale[i] * key_bias[c].
/// queries is I x D, keys is C x D, both row-major. key_bias may be empty.
void affine_scores_serial(std::span<const double> queries, std::span<const double> query_scale,
                          std::span<const double> keys, std::span<const double> key_bias,
                          std::size_t dim, std::span<double> out);
void affine_scores_parallel(std::span<const double> queries, std::span<const double> query_scale,
                            std::span<const double> keys, std::span<const double> key_bias,
                            std::size_t dim, std::span<double> out);

/// out[c] = log sum_v exp(<keys[c], rows[v]>). keys is C x D, rows is V x D.
void log_partition_serial(std::span<const double> keys, std::span<const double> rows,
                          std::size_t dim, std::span<double> out);
void log_partition_parallel(std::span<const double> keys, std::span<const double> rows,
                            std::size_t dim, std::span<double> out);

}  // namespace numem::kernels
