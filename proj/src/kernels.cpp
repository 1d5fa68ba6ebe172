#include "numem/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "numem/mathutil.hpp"

namespace numem::kernels {

void MixtureStats::add(const MixtureStats& other) {
  for (std::size_t k = 0; k < mass.size(); ++k) {
    mass[k] += other.mass[k];
    shift1[k] += other.shift1[k];
    shift2[k] += other.shift2[k];
  }
  log_likelihood += other.log_likelihood;
}

namespace {

std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

void accumulate_soft(const GmmModel& model, std::span<const double> data, std::span<double> lj,
                     MixtureStats& stats) {
  const std::size_t m = model.size();
  for (double x : data) {
    gmm_log_joint(model, x, lj);
    const double lse = log_sum_exp(lj);
    stats.log_likelihood += lse;
    for (std::size_t k = 0; k < m; ++k) {
      const double r = std::exp(lj[k] - lse);
      const double d = x - model.components[k].mean;
      stats.mass[k] += r;
      stats.shift1[k] += r * d;
      stats.shift2[k] += r * d * d;
    }
  }
}

void accumulate_hard(const GmmModel& model, std::span<const double> data,
                     std::span<std::uint32_t> assignment, std::span<double> lj,
                     MixtureStats& stats) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double x = data[i];
    gmm_log_joint(model, x, lj);
    stats.log_likelihood += log_sum_exp(lj);
    const auto best = static_cast<std::uint32_t>(std::max_element(lj.begin(), lj.end()) - lj.begin());
    assignment[i] = best;
    const double d = x - model.components[best].mean;
    stats.mass[best] += 1.0;
    stats.shift1[best] += d;
    stats.shift2[best] += d * d;
  }
}

double accumulate_ll(const GmmModel& model, std::span<const double> data, std::span<double> lj) {
  double total = 0.0;
  for (double x : data) {
    gmm_log_joint(model, x, lj);
    total += log_sum_exp(lj);
  }
  return total;
}

}  // namespace

MixtureStats soft_estep_serial(const GmmModel& model, std::span<const double> data) {
  MixtureStats stats(model.size());
  std::vector<double> lj(model.size());
  accumulate_soft(model, data, lj, stats);
  return stats;
}

MixtureStats soft_estep_parallel(const GmmModel& model, std::span<const double> data) {
  const std::size_t m = model.size();
  const std::size_t blocks = block_count(data.size());
  std::vector<MixtureStats> partial(blocks, MixtureStats(m));
#pragma omp parallel
  {
    std::vector<double> lj(m);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
      const std::size_t len = std::min(kBlockSize, data.size() - lo);
      accumulate_soft(model, data.subspan(lo, len), lj, partial[b]);
    }
  }
  MixtureStats stats(m);
  for (const auto& p : partial) stats.add(p);
  return stats;
}

MixtureStats hard_estep_serial(const GmmModel& model, std::span<const double> data,
                               std::span<std::uint32_t> assignment) {
  MixtureStats stats(model.size());
  std::vector<double> lj(model.size());
  accumulate_hard(model, data, assignment, lj, stats);
  return stats;
}

MixtureStats hard_estep_parallel(const GmmModel& model, std::span<const double> data,
                                 std::span<std::uint32_t> assignment) {
  const std::size_t m = model.size();
  const std::size_t blocks = block_count(data.size());
  std::vector<MixtureStats> partial(blocks, MixtureStats(m));
#pragma omp parallel
  {
    std::vector<double> lj(m);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
      const std::size_t len = std::min(kBlockSize, data.size() - lo);
      accumulate_hard(model, data.subspan(lo, len), assignment.subspan(lo, len), lj, partial[b]);
    }
  }
  MixtureStats stats(m);
  for (const auto& p : partial) stats.add(p);
  return stats;
}

double log_likelihood_serial(const GmmModel& model, std::span<const double> data) {
  std::vector<double> lj(model.size());
  return accumulate_ll(model, data, lj);
}

double log_likelihood_parallel(const GmmModel& model, std::span<const double> data) {
  const std::size_t blocks = block_count(data.size());
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel
  {
    std::vector<double> lj(model.size());
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
      const std::size_t len = std::min(kBlockSize, data.size() - lo);
      partial[b] = accumulate_ll(model, data.subspan(lo, len), lj);
    }
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double score_one(std::span<const double> queries, std::span<const double> query_scale,
                 std::span<const double> keys, std::span<const double> key_bias, std::size_t dim,
                 std::size_t i, std::size_t c) {
  double s = dot(&queries[i * dim], &keys[c * dim], dim);
  if (!key_bias.empty()) s -= query_scale[i] * key_bias[c];
  return s;
}

double partition_one(std::span<const double> keys, std::span<const double> rows, std::size_t dim,
                     std::size_t c) {
  const std::size_t v = rows.size() / dim;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < v; ++r) mx = std::max(mx, dot(&keys[c * dim], &rows[r * dim], dim));
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t r = 0; r < v; ++r) s += std::exp(dot(&keys[c * dim], &rows[r * dim], dim) - mx);
  return mx + std::log(s);
}

}  // namespace

void affine_scores_serial(std::span<const double> queries, std::span<const double> query_scale,
                          std::span<const double> keys, std::span<const double> key_bias,
                          std::size_t dim, std::span<double> out) {
  const std::size_t n_q = queries.size() / dim;
  const std::size_t n_k = keys.size() / dim;
  for (std::size_t i = 0; i < n_q; ++i) {
    for (std::size_t c = 0; c < n_k; ++c) {
      out[i * n_k + c] = score_one(queries, query_scale, keys, key_bias, dim, i, c);
    }
  }
}

void affine_scores_parallel(std::span<const double> queries, std::span<const double> query_scale,
                            std::span<const double> keys, std::span<const double> key_bias,
                            std::size_t dim, std::span<double> out) {
  const auto n_q = static_cast<std::ptrdiff_t>(queries.size() / dim);
  const std::size_t n_k = keys.size() / dim;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n_q; ++i) {
    for (std::size_t c = 0; c < n_k; ++c) {
      out[i * n_k + c] = score_one(queries, query_scale, keys, key_bias, dim, i, c);
    }
  }
}

void log_partition_serial(std::span<const double> keys, std::span<const double> rows,
                          std::size_t dim, std::span<double> out) {
  const std::size_t n_k = keys.size() / dim;
  for (std::size_t c = 0; c < n_k; ++c) out[c] = partition_one(keys, rows, dim, c);
}

void log_partition_parallel(std::span<const double> keys, std::span<const double> rows,
                            std::size_t dim, std::span<double> out) {
  const auto n_k = static_cast<std::ptrdiff_t>(keys.size() / dim);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n_k; ++c) out[c] = partition_one(keys, rows, dim, c);
}

}  // namespace numem::kernels
