#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "numem/composer.hpp"
#include "numem/corpus.hpp"
#include "numem/rng.hpp"

namespace numem {

/// A corpus token resolved for training. Word refs index the vocabulary
/// (NumAsTok numerals are word refs too); Numeral refs index the distinct
/// numeral table of a TrainingCorpus.
struct TokenRef {
  enum class Kind : std::uint8_t { Word, Numeral };
  Kind kind = Kind::Word;
  std::uint32_t index = 0;

  static TokenRef word(std::uint32_t i) { return {Kind::Word, i}; }
  static TokenRef numeral(std::uint32_t i) { return {Kind::Numeral, i}; }
  bool is_numeral() const { return kind == Kind::Numeral; }
  friend bool operator==(const TokenRef&, const TokenRef&) = default;
};

struct TrainingCorpus {
  std::vector<std::vector<TokenRef>> sentences;
  std::vector<double> numeral_values;       // distinct numerals, first-seen order
  std::vector<std::uint64_t> numeral_counts;
  std::uint64_t word_tokens = 0;
  std::uint64_t numeral_tokens = 0;
  std::uint64_t positions() const { return word_tokens + numeral_tokens; }
};

/// Resolves tokens against the vocabulary. In Prototype and Fixed modes
/// numerals become Numeral refs into a table of distinct values.
TrainingCorpus resolve_corpus(std::span<const Sentence> corpus, const Vocabulary& vocab);

/// Walker/Vose alias table: O(1) draws from a discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  std::size_t sample(Rng& rng) const;
  /// Normalized probability of outcome i.
  double probability(std::size_t i) const { return normalized_[i]; }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
  std::vector<double> normalized_;
};

/// Negatives are drawn from two pools: a Bernoulli(rho) coin picks the
/// numeral pool, rho being the numeral share of corpus tokens; then an
/// alias draw from count^(3/4) within the chosen pool.
class NegativeSampler {
 public:
  NegativeSampler() = default;
  NegativeSampler(std::vector<TokenRef> words, std::span<const double> word_counts,
                  std::vector<TokenRef> numerals, std::span<const double> numeral_counts,
                  double numeral_ratio);

  TokenRef draw(Rng& rng) const;

  double numeral_ratio() const { return ratio_; }
  const std::vector<TokenRef>& word_pool() const { return word_refs_; }
  const std::vector<TokenRef>& numeral_pool() const { return numeral_refs_; }
  const AliasTable& word_table() const { return words_; }
  const AliasTable& numeral_table() const { return numerals_; }

 private:
  std::vector<TokenRef> word_refs_;
  std::vector<TokenRef> numeral_refs_;
  AliasTable words_;
  AliasTable numerals_;
  double ratio_ = 0.0;
};

inline constexpr double kNegativePower = 0.75;

NegativeSampler build_negative_sampler(const Vocabulary& vocab, const TrainingCorpus& corpus);

struct TrainConfig {
  std::size_t dim = 300;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 1;
  double lr = 5e-3;
  std::uint64_t seed = 1;
  EmbeddingMode mode = EmbeddingMode::Prototype;
  std::uint64_t min_count = 5;
  std::size_t max_vocab = 300000;
  std::size_t max_numeral_vocab = std::numeric_limits<std::size_t>::max();
  std::size_t threads = 1;  // >1 forfeits determinism
  double beta = 1.0;

  /// Throws InputError when a field is out of range.
  void validate() const;
};

struct TrainStats {
  std::uint64_t steps = 0;
  double loss = 0.0;
  std::vector<double> epoch_loss;
};

/// E_I and M_I uniform in (-0.5/D, 0.5/D); E_O and M_O zero.
template <class Real>
BasicEmbeddingModel<Real> init_model(Vocabulary vocab, std::optional<PrototypeModel> prototypes,
                                     const TrainConfig& config);

/// Skip-gram with negative sampling over a resolved corpus. Numeral
/// embeddings are composed from prototype columns; their gradients are
/// routed back to those columns scaled by the similarity weights.
template <class Real>
class SgnsTrainer {
 public:
  SgnsTrainer(BasicEmbeddingModel<Real>& model, const TrainingCorpus& corpus,
              const TrainConfig& config);

  /// One (center, target) pair with explicit negatives. All scores use the
  /// parameters as they were on entry; updates are applied afterwards, so
  /// the applied change is exactly -lr times the gradient of the returned
  /// loss  -log s(<o_t, i_c>) - sum_neg log s(-<o_n, i_c>).
  double pair_update(TokenRef center, TokenRef target, std::span<const TokenRef> negatives,
                     double lr);

  /// Runs pair_update for every context token with fresh negatives. A
  /// negative equal to the target is redrawn once. Returns the summed loss.
  double step(TokenRef center, std::span<const TokenRef> context, double lr, Rng& rng);

  /// Full training loop: fixed window within each sentence, linear learning
  /// rate decay to lr/100.
  TrainStats train();

  std::vector<double> embedding(TokenRef ref, Side side) const;
  const SimilarityWeights& weights(std::uint32_t numeral) const;
  const NegativeSampler& sampler() const { return sampler_; }
  const TrainingCorpus& corpus() const { return corpus_; }

 private:
  void add_to(TokenRef ref, Side side, std::span<const double> delta);
  bool parameters_finite() const;
  double run_sentence(const std::vector<TokenRef>& sentence, double lr_start,
                      std::uint64_t total_steps, std::uint64_t& done, Rng& rng);

  BasicEmbeddingModel<Real>& model_;
  const TrainingCorpus& corpus_;
  TrainConfig config_;
  NegativeSampler sampler_;
  std::vector<SimilarityWeights> weights_;
};

/// Builds the vocabulary, resolves the corpus, initializes and trains.
/// Prototype mode requires prototypes. Throws InputError("empty corpus").
EmbeddingModel train(std::span<const Sentence> corpus, const TrainConfig& config,
                     std::optional<PrototypeModel> prototypes, TrainStats* stats = nullptr);

}  // namespace numem
