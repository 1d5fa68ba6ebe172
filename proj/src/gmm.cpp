#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "numem/errors.hpp"
#include "numem/kernels.hpp"
#include "numem/prototypes.hpp"
#include "numem/rng.hpp"

namespace numem {

namespace {

// Components whose total responsibility falls below this are reseeded.
constexpr double kEmptyMass = 1e-8;

std::vector<double> distinct_sorted(std::span<const double> data) {
  std::vector<double> v(data.begin(), data.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Picks up to m distinct values in the order they appear in a random
// permutation of the multiset, so frequent values are more likely.
std::vector<double> draw_distinct(std::span<const double> data, std::size_t m, Rng& rng) {
  std::vector<double> pool(data.begin(), data.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < pool.size() && out.size() < m; ++i) {
    std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    if (std::find(out.begin(), out.end(), pool[i]) == out.end()) out.push_back(pool[i]);
  }
  return out;
}

// Index of the nearest value in ascending `centers`; ties go to the smaller center.
std::size_t nearest_sorted(std::span<const double> centers, double x) {
  auto it = std::lower_bound(centers.begin(), centers.end(), x);
  if (it == centers.begin()) return 0;
  if (it == centers.end()) return centers.size() - 1;
  const auto hi = static_cast<std::size_t>(it - centers.begin());
  return (x - centers[hi - 1] <= centers[hi] - x) ? hi - 1 : hi;
}

GmmModel maximize(const GmmModel& model, const kernels::MixtureStats& stats,
                  std::span<const double> data, Rng& rng, int& reseeds) {
  GmmModel next = model;
  const double total = static_cast<double>(data.size());
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < model.size(); ++k) {
    auto& c = next.components[k];
    const double mass = stats.mass[k];
    if (mass < kEmptyMass) {
      c.mean = data[rng.below(data.size())];
      c.sigma = kSigmaFloor;
      c.weight = 1.0 / total;
      ++reseeds;
    } else {
      const double shift = stats.shift1[k] / mass;
      const double var = stats.shift2[k] / mass - shift * shift;
      c.mean = model.components[k].mean + shift;
      c.sigma = std::max(std::sqrt(std::max(var, 0.0)), kSigmaFloor);
      c.weight = mass / total;
    }
    weight_sum += c.weight;
  }
  for (auto& c : next.components) c.weight /= weight_sum;
  return next;
}

}  // namespace

std::vector<double> GmmModel::means() const {
  std::vector<double> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.mean);
  return out;
}

void GmmModel::validate() const {
  if (components.empty()) throw std::logic_error("GMM has no components");
  double sum = 0.0;
  for (const auto& c : components) {
    if (!std::isfinite(c.weight) || !std::isfinite(c.mean) || !std::isfinite(c.sigma)) {
      throw std::logic_error("GMM has a non-finite parameter");
    }
    if (c.weight < 0.0) throw std::logic_error("GMM has a negative weight");
    if (c.sigma < kSigmaFloor) throw std::logic_error("GMM sigma below floor");
    sum += c.weight;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw std::logic_error("GMM weights do not sum to one");
}

std::string_view to_string(GmmInit init) {
  switch (init) {
    case GmmInit::Random: return "random";
    case GmmInit::Som: return "som";
    case GmmInit::KMeans: return "kmeans";
  }
  return "?";
}

GmmInit parse_gmm_init(std::string_view name) {
  if (name == "random") return GmmInit::Random;
  if (name == "som") return GmmInit::Som;
  if (name == "kmeans") return GmmInit::KMeans;
  throw InputError("unknown GMM initialization '" + std::string(name) + "'");
}

std::string_view to_string(EmMode mode) { return mode == EmMode::Soft ? "soft" : "hard"; }

EmMode parse_em_mode(std::string_view name) {
  if (name == "soft") return EmMode::Soft;
  if (name == "hard") return EmMode::Hard;
  throw InputError("unknown EM mode '" + std::string(name) + "'");
}

void gmm_log_joint(const GmmModel& model, double x, std::span<double> out) {
  static const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < model.size(); ++k) {
    const auto& c = model.components[k];
    const double z = (x - c.mean) / c.sigma;
    out[k] = std::log(c.weight) - std::log(c.sigma) - kHalfLog2Pi - 0.5 * z * z;
  }
}

double gmm_log_likelihood(const GmmModel& model, std::span<const double> data,
                          Execution execution) {
  return execution == Execution::Parallel ? kernels::log_likelihood_parallel(model, data)
                                          : kernels::log_likelihood_serial(model, data);
}

std::vector<double> kmeans_1d(std::span<const double> data, std::size_t m, std::size_t max_iter,
                              std::uint64_t seed) {
  if (data.empty()) throw InputError("empty number dataset");
  if (m == 0) throw InputError("prototype count must be positive");
  if (m > data.size()) throw InputError("too many prototypes");

  Rng rng = Rng::for_stage(seed, "kmeans");
  std::vector<double> centers = draw_distinct(data, m, rng);
  while (centers.size() < m) centers.push_back(data[rng.below(data.size())]);
  std::sort(centers.begin(), centers.end());

  std::vector<std::uint32_t> assign(data.size(), 0);
  std::vector<double> sum(m);
  std::vector<std::size_t> count(m);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = iter == 0;
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto k = static_cast<std::uint32_t>(nearest_sorted(centers, data[i]));
      if (k != assign[i]) changed = true;
      assign[i] = k;
      sum[k] += data[i];
      ++count[k];
    }
    if (!changed) break;
    for (std::size_t k = 0; k < m; ++k) {
      centers[k] = count[k] ? sum[k] / static_cast<double>(count[k]) : data[rng.below(data.size())];
    }
    // Re-sorting permutes cluster labels, which forces one more pass.
    std::sort(centers.begin(), centers.end());
  }
  return centers;
}

GmmModel gmm_from_means(std::span<const double> data, std::vector<double> means) {
  if (data.empty()) throw InputError("empty number dataset");
  const std::size_t m = means.size();
  std::vector<double> sum(m, 0.0);
  std::vector<double> sum_sq(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  for (double x : data) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m; ++k) {
      if (std::fabs(x - means[k]) < std::fabs(x - means[best])) best = k;
    }
    sum[best] += x;
    ++count[best];
  }
  std::vector<double> centroid(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (count[k]) centroid[k] = sum[k] / static_cast<double>(count[k]);
  }
  for (double x : data) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m; ++k) {
      if (std::fabs(x - means[k]) < std::fabs(x - means[best])) best = k;
    }
    const double d = x - centroid[best];
    sum_sq[best] += d * d;
  }

  const bool any_empty = std::find(count.begin(), count.end(), 0) != count.end();
  GmmModel model;
  model.components.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    auto& c = model.components[k];
    c.mean = means[k];
    c.sigma = count[k] < 2
                  ? kSigmaFloor
                  : std::max(std::sqrt(sum_sq[k] / static_cast<double>(count[k])), kSigmaFloor);
    c.weight = any_empty ? 1.0 / static_cast<double>(m)
                         : static_cast<double>(count[k]) / static_cast<double>(data.size());
  }
  return model;
}

GmmModel init_gmm(std::span<const double> data, std::size_t m, const GmmInitOptions& options,
                  std::uint64_t seed) {
  if (data.empty()) throw InputError("empty number dataset");
  if (m == 0) throw InputError("prototype count must be positive");

  std::vector<double> means;
  switch (options.strategy) {
    case GmmInit::Random: {
      if (m > distinct_sorted(data).size()) throw InputError("too many prototypes");
      Rng rng = Rng::for_stage(seed, "gmm-init");
      means = draw_distinct(data, m, rng);
      break;
    }
    case GmmInit::Som:
      means = train_som(data, m, options.som, seed).neurons;
      break;
    case GmmInit::KMeans:
      means = kmeans_1d(data, m, options.kmeans_max_iter, seed);
      break;
  }
  return gmm_from_means(data, std::move(means));
}

GmmModel em_fit(GmmModel model, std::span<const double> data, const EmOptions& options,
                EmTrace* trace) {
  if (data.empty()) throw InputError("empty number dataset");
  model.validate();
  EmTrace local;
  EmTrace& tr = trace ? *trace : local;
  tr = EmTrace{};
  Rng rng = Rng::for_stage(options.seed, "em-reseed");
  const bool parallel = options.execution == Execution::Parallel;

  if (options.mode == EmMode::Soft) {
    auto estep = [&](const GmmModel& g) {
      return parallel ? kernels::soft_estep_parallel(g, data) : kernels::soft_estep_serial(g, data);
    };
    auto stats = estep(model);
    tr.log_likelihood.push_back(stats.log_likelihood);
    for (int it = 1; it <= options.max_iter; ++it) {
      const int reseeds_before = tr.reseeds;
      GmmModel next = maximize(model, stats, data, rng, tr.reseeds);
      auto next_stats = estep(next);
      tr.log_likelihood.push_back(next_stats.log_likelihood);
      tr.iterations = it;
      const double gain = next_stats.log_likelihood - stats.log_likelihood;
      const double scale = std::max(std::fabs(stats.log_likelihood), 1e-300);
      model = std::move(next);
      stats = std::move(next_stats);
      if (tr.reseeds == reseeds_before && gain < options.tol * scale) {
        tr.converged = true;
        break;
      }
    }
    return model;
  }

  std::vector<std::uint32_t> assign(data.size());
  std::vector<std::uint32_t> next_assign(data.size());
  auto estep = [&](const GmmModel& g, std::vector<std::uint32_t>& a) {
    return parallel ? kernels::hard_estep_parallel(g, data, a)
                    : kernels::hard_estep_serial(g, data, a);
  };
  auto stats = estep(model, assign);
  tr.log_likelihood.push_back(stats.log_likelihood);
  for (int it = 1; it <= options.max_iter; ++it) {
    model = maximize(model, stats, data, rng, tr.reseeds);
    stats = estep(model, next_assign);
    tr.log_likelihood.push_back(stats.log_likelihood);
    tr.iterations = it;
    if (next_assign == assign) {
      tr.converged = true;
      break;
    }
    std::swap(assign, next_assign);
  }
  return model;
}

std::size_t default_prototype_count(std::span<const double> data) {
  if (data.empty()) throw InputError("empty number dataset");
  const auto n = distinct_sorted(data).size();
  const double l = std::log(static_cast<double>(n));
  const auto m = static_cast<std::size_t>(std::llround(l * l));
  return std::clamp<std::size_t>(m, 1, n);
}

}  // namespace numem
