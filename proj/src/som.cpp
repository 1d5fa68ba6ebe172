#include <algorithm>
#include <cmath>

#include "numem/errors.hpp"
#include "numem/prototypes.hpp"
#include "numem/rng.hpp"

namespace numem {

std::size_t som_bmu(std::span<const double> neurons, double n) {
  std::size_t best = 0;
  double best_d = std::fabs(neurons[0] - n);
  for (std::size_t i = 1; i < neurons.size(); ++i) {
    const double d = std::fabs(neurons[i] - n);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

SomModel train_som(std::span<const double> data, std::size_t m, const SomSchedule& schedule,
                   std::uint64_t seed) {
  if (data.empty()) throw InputError("empty number dataset");
  if (m == 0) throw InputError("prototype count must be positive");

  const std::uint64_t iters =
      schedule.iterations > 0
          ? schedule.iterations
          : std::min<std::uint64_t>(20 * static_cast<std::uint64_t>(data.size()), 2'000'000);
  const double width_start =
      schedule.width_start > 0 ? schedule.width_start : std::max(static_cast<double>(m) / 4.0, 1.0);

  Rng rng = Rng::for_stage(seed, "som");
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());

  SomModel som;
  som.neurons.resize(m);
  for (auto& w : som.neurons) w = rng.uniform(*lo, *hi);
  std::sort(som.neurons.begin(), som.neurons.end());

  auto& w = som.neurons;
  const auto im = static_cast<std::ptrdiff_t>(m);
  for (std::uint64_t t = 0; t < iters; ++t) {
    const double frac = iters > 1 ? static_cast<double>(t) / static_cast<double>(iters - 1) : 0.0;
    const double lr = schedule.lr_start + (schedule.lr_end - schedule.lr_start) * frac;
    const double width = width_start + (schedule.width_end - width_start) * frac;
    const double n = data[rng.below(data.size())];
    const auto b = static_cast<std::ptrdiff_t>(som_bmu(w, n));

    // exp(-d^2 / 2w^2) < 1e-13 beyond this radius; those updates are skipped.
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(width * 7.7));
    const std::ptrdiff_t first = std::max<std::ptrdiff_t>(0, b - radius);
    const std::ptrdiff_t last = std::min<std::ptrdiff_t>(im - 1, b + radius);
    const double inv = 1.0 / (2.0 * width * width);
    for (std::ptrdiff_t i = first; i <= last; ++i) {
      const auto d = static_cast<double>(i - b);
      const double h = std::exp(-d * d * inv);
      w[i] += lr * h * (n - w[i]);
    }
  }
  std::sort(w.begin(), w.end());
  som.iterations = iters;
  return som;
}

}  // namespace numem
