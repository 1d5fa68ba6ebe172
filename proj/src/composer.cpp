#include "numem/composer.hpp"

#include <cmath>

#include "numem/mathutil.hpp"

namespace numem {

SimilarityWeights weights_som(std::span<const double> prototypes, double n, double beta,
                              ScalarMap g) {
  const double gn = g(n);
  std::vector<double> dist(prototypes.size());
  std::size_t exact = 0;
  for (std::size_t k = 0; k < prototypes.size(); ++k) {
    dist[k] = std::fabs(g(prototypes[k]) - gn);
    if (dist[k] < kExactMatchDistance) ++exact;
  }

  SimilarityWeights w{std::vector<double>(prototypes.size(), 0.0)};
  if (exact > 0) {
    for (std::size_t k = 0; k < dist.size(); ++k) {
      if (dist[k] < kExactMatchDistance) w.values[k] = 1.0 / static_cast<double>(exact);
    }
    return w;
  }
  // Normalize in log space: d^-beta overflows for small d and large beta.
  std::vector<double> logsim(dist.size());
  for (std::size_t k = 0; k < dist.size(); ++k) logsim[k] = -beta * std::log(dist[k]);
  const double lse = log_sum_exp(logsim);
  for (std::size_t k = 0; k < dist.size(); ++k) w.values[k] = std::exp(logsim[k] - lse);
  return w;
}

SimilarityWeights weights_gmm(const GmmModel& gmm, double n, ScalarMap g) {
  std::vector<double> lj(gmm.size());
  gmm_log_joint(gmm, g(n), lj);
  const double lse = log_sum_exp(lj);
  SimilarityWeights w{std::vector<double>(gmm.size())};
  for (std::size_t k = 0; k < lj.size(); ++k) w.values[k] = std::exp(lj[k] - lse);
  return w;
}

SimilarityWeights similarity_weights(const PrototypeModel& prototypes, double raw_numeral,
                                     double beta) {
  const double q = to_induction_space(raw_numeral, prototypes.stage);
  if (prototypes.method == PrototypeMethod::Gmm) return weights_gmm(prototypes.gmm, q);
  const ScalarMap g = prototypes.stage == TransformStage::Similarity ? ScalarMap::squashing()
                                                                     : ScalarMap::identity();
  return weights_som(prototypes.values, q, beta, g);
}

std::vector<double> fixed_embedding(double n, std::size_t dim) {
  const double z = 2.0 * static_cast<double>(dim);
  std::vector<double> v(dim, 1.0 / z);
  v[0] = squash(n) / z;
  return v;
}

}  // namespace numem
