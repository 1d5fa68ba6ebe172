#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "numem/numtransform.hpp"

namespace numem {

enum class Execution { Serial, Parallel };

// ---------------------------------------------------------------------------
// Self-organizing map (1-D)

/// Training schedule. Zero values mean "derive from the data":
///   iterations  -> 20 * |X| draws, capped at 2e6
///   width_start -> max(m / 4, 1)
/// Learning rate and neighbourhood width decay linearly from start to end.
struct SomSchedule {
  std::uint64_t iterations = 0;
  double lr_start = 0.5;
  double lr_end = 0.01;
  double width_start = 0.0;
  double width_end = 0.5;
};

struct SomModel {
  std::vector<double> neurons;  // ascending after training
  std::uint64_t iterations = 0;
};

/// Index of the neuron nearest to `n`; ties go to the lowest index.
std::size_t som_bmu(std::span<const double> neurons, double n);

/// Sequential Kohonen training: draw a sample, find its BMU b, then move
/// every neuron i by lr(t) * exp(-(i-b)^2 / (2 width(t)^2)) * (n - w_i).
/// Neurons are initialized uniformly in [min X, max X].
SomModel train_som(std::span<const double> data, std::size_t m, const SomSchedule& schedule,
                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gaussian mixture

/// Lower bound on component standard deviations, in induction space.
inline constexpr double kSigmaFloor = 1e-4;

struct GmmComponent {
  double weight = 0.0;
  double mean = 0.0;
  double sigma = 1.0;
};

struct GmmModel {
  std::vector<GmmComponent> components;

  std::size_t size() const { return components.size(); }
  std::vector<double> means() const;
  /// Throws std::logic_error when weights do not sum to one, a weight is
  /// negative, a sigma is below the floor, or a value is non-finite.
  void validate() const;
};

enum class GmmInit { Random, Som, KMeans };
enum class EmMode { Soft, Hard };

std::string_view to_string(GmmInit init);
GmmInit parse_gmm_init(std::string_view name);
std::string_view to_string(EmMode mode);
EmMode parse_em_mode(std::string_view name);

struct GmmInitOptions {
  GmmInit strategy = GmmInit::KMeans;
  SomSchedule som;                 // SOM-based strategy only
  std::size_t kmeans_max_iter = 300;
};

/// Sets means by the chosen strategy, then assigns each sample to its
/// nearest mean: sigma = std of the assigned samples (floor when fewer than
/// two), weight = assigned fraction, or uniform when any component is empty.
GmmModel init_gmm(std::span<const double> data, std::size_t m, const GmmInitOptions& options,
                  std::uint64_t seed);

/// The assignment step of init_gmm for caller-provided means.
GmmModel gmm_from_means(std::span<const double> data, std::vector<double> means);

/// Lloyd's algorithm from m randomly chosen samples. Returns sorted centroids.
std::vector<double> kmeans_1d(std::span<const double> data, std::size_t m, std::size_t max_iter,
                              std::uint64_t seed);

struct EmOptions {
  EmMode mode = EmMode::Soft;
  double tol = 1e-6;  // relative log-likelihood improvement
  int max_iter = 200;
  Execution execution = Execution::Parallel;
  std::uint64_t seed = 0;  // reseeding of empty components
};

struct EmTrace {
  std::vector<double> log_likelihood;  // before each M-step, then final
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;
};

/// Soft EM stops on relative likelihood improvement below tol; hard EM stops
/// when the assignments stop changing. Both stop at max_iter.
GmmModel em_fit(GmmModel model, std::span<const double> data, const EmOptions& options,
                EmTrace* trace = nullptr);

/// Sum over samples of log sum_k pi_k N(x; mu_k, sigma_k^2), via log-sum-exp.
double gmm_log_likelihood(const GmmModel& model, std::span<const double> data,
                          Execution execution = Execution::Serial);

/// log(pi_k) + log N(x; mu_k, sigma_k^2) for every component.
void gmm_log_joint(const GmmModel& model, double x, std::span<double> out);

/// round((ln N)^2) with N the number of distinct values, clamped to [1, N].
std::size_t default_prototype_count(std::span<const double> data);

// ---------------------------------------------------------------------------
// Induced prototypes

enum class PrototypeMethod { Som, Gmm };

std::string_view to_string(PrototypeMethod method);
PrototypeMethod parse_prototype_method(std::string_view name);

/// Prototype values live in induction space (squashed for the Dataset stage).
struct PrototypeModel {
  PrototypeMethod method = PrototypeMethod::Som;
  TransformStage stage = TransformStage::Dataset;
  std::vector<double> values;
  GmmModel gmm;  // populated for the Gmm method

  std::size_t size() const { return values.size(); }

  static PrototypeModel from_som(const SomModel& som, TransformStage stage);
  static PrototypeModel from_gmm(const GmmModel& gmm, TransformStage stage);
};

/// Header `PROTO <som|gmm> <m> <dataset|similarity>`, then `mu pi sigma`
/// per component with 17 significant digits (SOM rows are `mu 0 0`).
void write_prototypes(std::ostream& out, const PrototypeModel& model);

/// Reads the format above. `line_offset` shifts reported line numbers when
/// the block is embedded in a larger file.
PrototypeModel read_prototypes(std::istream& in, std::size_t line_offset = 0);

}  // namespace numem
