#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "numem/corpus.hpp"
#include "numem/prototypes.hpp"

namespace numem {

/// Normalized, non-negative per-prototype weights for one numeral.
struct SimilarityWeights {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
};

/// Distances in g-space below this count as exact prototype matches.
inline constexpr double kExactMatchDistance = 1e-12;

/// sim(p, n) = |g(p) - g(n)|^-beta, normalized. Exact matches share the
/// weight uniformly and every other prototype gets zero.
SimilarityWeights weights_som(std::span<const double> prototypes, double n, double beta,
                              ScalarMap g);

/// Posterior responsibilities P(Z = k | U = g(n)).
SimilarityWeights weights_gmm(const GmmModel& gmm, double n, ScalarMap g = ScalarMap::identity());

/// Weights for a raw numeral under the model's stage. For the Dataset stage
/// the numeral is squashed into induction space and compared directly; for
/// the Similarity stage SOM distances are taken between squashed values,
/// while a GMM posterior is evaluated at the raw value (a GMM fitted to raw
/// numbers has no separate similarity space).
SimilarityWeights similarity_weights(const PrototypeModel& prototypes, double raw_numeral,
                                     double beta);

/// Column-major D x cols matrix: column j is one embedding vector.
template <class Real>
struct Matrix {
  std::size_t dim = 0;
  std::size_t cols = 0;
  std::vector<Real> data;

  Matrix() = default;
  Matrix(std::size_t d, std::size_t n) : dim(d), cols(n), data(d * n, Real{0}) {}

  std::span<Real> col(std::size_t j) { return {data.data() + j * dim, dim}; }
  std::span<const Real> col(std::size_t j) const { return {data.data() + j * dim, dim}; }
  bool empty() const { return cols == 0; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// sum_k weights_k * M[:, k]. Throws std::invalid_argument on size mismatch.
template <class Real>
std::vector<Real> compose(const SimilarityWeights& weights, const Matrix<Real>& m) {
  if (weights.size() != m.cols) {
    throw std::invalid_argument("weight count does not match prototype columns");
  }
  std::vector<double> acc(m.dim, 0.0);
  for (std::size_t k = 0; k < m.cols; ++k) {
    const double w = weights[k];
    if (w == 0.0) continue;
    auto c = m.col(k);
    for (std::size_t d = 0; d < m.dim; ++d) acc[d] += w * static_cast<double>(c[d]);
  }
  return std::vector<Real>(acc.begin(), acc.end());
}

/// [f(n); 1, ..., 1] / (2 D), with f the squashing function.
std::vector<double> fixed_embedding(double n, std::size_t dim);

enum class Side { Input, Output };

/// Word and prototype embedding matrices plus everything needed to embed a
/// numeral. Prototype mode: proto_in/proto_out have one column per
/// prototype. NumAsTok: numerals are vocabulary columns. Fixed: numerals
/// use fixed_embedding and have no trainable parameters.
template <class Real>
struct BasicEmbeddingModel {
  EmbeddingMode mode = EmbeddingMode::Prototype;
  std::size_t dim = 0;
  Vocabulary vocab;
  std::optional<PrototypeModel> prototypes;
  double beta = 1.0;
  Matrix<Real> word_in, word_out, proto_in, proto_out;

  std::size_t prototype_count() const { return prototypes ? prototypes->size() : 0; }
  const Matrix<Real>& words(Side s) const { return s == Side::Input ? word_in : word_out; }
  Matrix<Real>& words(Side s) { return s == Side::Input ? word_in : word_out; }
  const Matrix<Real>& protos(Side s) const { return s == Side::Input ? proto_in : proto_out; }
  Matrix<Real>& protos(Side s) { return s == Side::Input ? proto_in : proto_out; }

  SimilarityWeights numeral_weights(double n) const {
    if (!prototypes) throw std::logic_error("model has no prototypes");
    return similarity_weights(*prototypes, n, beta);
  }
};

using EmbeddingModel = BasicEmbeddingModel<float>;

template <class Real>
std::vector<Real> word_vector(const BasicEmbeddingModel<Real>& model, std::uint32_t index,
                              Side side) {
  auto c = model.words(side).col(index);
  return {c.begin(), c.end()};
}

template <class Real>
std::vector<Real> numeral_vector(const BasicEmbeddingModel<Real>& model, double n, Side side) {
  switch (model.mode) {
    case EmbeddingMode::Prototype:
      return compose(model.numeral_weights(n), model.protos(side));
    case EmbeddingMode::NumAsTok:
      return word_vector(model, model.vocab.resolve_numeral(n), side);
    case EmbeddingMode::Fixed: {
      auto f = fixed_embedding(n, model.dim);
      return {f.begin(), f.end()};
    }
  }
  return {};
}

/// Words resolve to their column (unknown-word column when OOV); numerals
/// dispatch on the model mode.
template <class Real>
std::vector<Real> lookup(const Token& token, Side side, const BasicEmbeddingModel<Real>& model) {
  if (token.is_numeral()) return numeral_vector(model, token.value, side);
  return word_vector(model, model.vocab.resolve_word(token.surface), side);
}

}  // namespace numem
