#include "numem/sgns.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <omp.h>

#include "numem/errors.hpp"
#include "numem/mathutil.hpp"

namespace numem {

TrainingCorpus resolve_corpus(std::span<const Sentence> corpus, const Vocabulary& vocab) {
  TrainingCorpus out;
  std::unordered_map<double, std::uint32_t> numeral_index;
  const bool numerals_in_vocab = vocab.has_numeral_entries();
  for (const auto& sentence : corpus) {
    std::vector<TokenRef> refs;
    refs.reserve(sentence.size());
    for (const auto& tok : sentence) {
      if (!tok.is_numeral()) {
        ++out.word_tokens;
        refs.push_back(TokenRef::word(vocab.resolve_word(tok.surface)));
        continue;
      }
      ++out.numeral_tokens;
      if (numerals_in_vocab) {
        refs.push_back(TokenRef::word(vocab.resolve_numeral(tok.value)));
        continue;
      }
      auto [it, fresh] =
          numeral_index.try_emplace(tok.value, static_cast<std::uint32_t>(out.numeral_values.size()));
      if (fresh) {
        out.numeral_values.push_back(tok.value);
        out.numeral_counts.push_back(0);
      }
      ++out.numeral_counts[it->second];
      refs.push_back(TokenRef::numeral(it->second));
    }
    if (!refs.empty()) out.sentences.push_back(std::move(refs));
  }
  return out;
}

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) return;
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("alias table needs positive total weight");

  normalized_.resize(n);
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    normalized_[i] = weights[i] / total;
    scaled[i] = normalized_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) prob_[i] = 1.0;
  for (auto i : small) prob_[i] = 1.0;  // leftovers from rounding
}

std::size_t AliasTable::sample(Rng& rng) const {
  const std::size_t column = rng.below(prob_.size());
  return rng.uniform() < prob_[column] ? column : alias_[column];
}

NegativeSampler::NegativeSampler(std::vector<TokenRef> words, std::span<const double> word_counts,
                                 std::vector<TokenRef> numerals,
                                 std::span<const double> numeral_counts, double numeral_ratio)
    : word_refs_(std::move(words)), numeral_refs_(std::move(numerals)), ratio_(numeral_ratio) {
  auto powered = [](std::span<const double> counts) {
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) w[i] = std::pow(counts[i], kNegativePower);
    return w;
  };
  if (!word_refs_.empty()) words_ = AliasTable(powered(word_counts));
  if (!numeral_refs_.empty()) numerals_ = AliasTable(powered(numeral_counts));
  if (numeral_refs_.empty()) ratio_ = 0.0;
  if (word_refs_.empty()) ratio_ = 1.0;
  if (word_refs_.empty() && numeral_refs_.empty()) {
    throw InputError("negative sampler needs at least one token");
  }
}

TokenRef NegativeSampler::draw(Rng& rng) const {
  const bool numeral = ratio_ >= 1.0 || (ratio_ > 0.0 && rng.bernoulli(ratio_));
  if (numeral) return numeral_refs_[numerals_.sample(rng)];
  return word_refs_[words_.sample(rng)];
}

NegativeSampler build_negative_sampler(const Vocabulary& vocab, const TrainingCorpus& corpus) {
  std::vector<TokenRef> words, numerals;
  std::vector<double> word_counts, numeral_counts;
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    const auto& e = vocab.entry(i);
    if (e.count == 0) continue;
    if (e.numeral) {
      numerals.push_back(TokenRef::word(i));
      numeral_counts.push_back(static_cast<double>(e.count));
    } else {
      words.push_back(TokenRef::word(i));
      word_counts.push_back(static_cast<double>(e.count));
    }
  }
  for (std::uint32_t i = 0; i < corpus.numeral_values.size(); ++i) {
    numerals.push_back(TokenRef::numeral(i));
    numeral_counts.push_back(static_cast<double>(corpus.numeral_counts[i]));
  }
  const auto total = corpus.positions();
  const double ratio =
      total ? static_cast<double>(corpus.numeral_tokens) / static_cast<double>(total) : 0.0;
  return NegativeSampler(std::move(words), word_counts, std::move(numerals), numeral_counts, ratio);
}

void TrainConfig::validate() const {
  if (dim < 2) throw InputError("dimension must be at least 2");
  if (window < 1) throw InputError("window must be at least 1");
  if (negatives < 1) throw InputError("negative sample count must be at least 1");
  if (!(lr > 0.0)) throw InputError("learning rate must be positive");
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  if (threads < 1) throw InputError("thread count must be at least 1");
}

template <class Real>
BasicEmbeddingModel<Real> init_model(Vocabulary vocab, std::optional<PrototypeModel> prototypes,
                                     const TrainConfig& config) {
  config.validate();
  BasicEmbeddingModel<Real> model;
  model.mode = config.mode;
  model.dim = config.dim;
  model.beta = config.beta;
  model.vocab = std::move(vocab);
  if (config.mode == EmbeddingMode::Prototype) {
    if (!prototypes || prototypes->size() == 0) {
      throw InputError("prototype mode requires a prototype set");
    }
    model.prototypes = std::move(prototypes);
  }

  Rng rng = Rng::for_stage(config.seed, "init");
  const double half = 0.5 / static_cast<double>(config.dim);
  auto fill_uniform = [&](Matrix<Real>& m) {
    for (auto& v : m.data) v = static_cast<Real>(rng.uniform(-half, half));
  };
  model.word_in = Matrix<Real>(config.dim, model.vocab.size());
  model.word_out = Matrix<Real>(config.dim, model.vocab.size());
  fill_uniform(model.word_in);
  if (model.prototypes) {
    model.proto_in = Matrix<Real>(config.dim, model.prototypes->size());
    model.proto_out = Matrix<Real>(config.dim, model.prototypes->size());
    fill_uniform(model.proto_in);
  }
  return model;
}

template <class Real>
SgnsTrainer<Real>::SgnsTrainer(BasicEmbeddingModel<Real>& model, const TrainingCorpus& corpus,
                               const TrainConfig& config)
    : model_(model),
      corpus_(corpus),
      config_(config),
      sampler_(build_negative_sampler(model.vocab, corpus)) {
  config_.validate();
  if (model_.mode == EmbeddingMode::Prototype) {
    weights_.reserve(corpus.numeral_values.size());
    for (double v : corpus.numeral_values) weights_.push_back(model_.numeral_weights(v));
  }
}

template <class Real>
const SimilarityWeights& SgnsTrainer<Real>::weights(std::uint32_t numeral) const {
  return weights_.at(numeral);
}

template <class Real>
std::vector<double> SgnsTrainer<Real>::embedding(TokenRef ref, Side side) const {
  const std::size_t dim = model_.dim;
  if (!ref.is_numeral()) {
    auto c = model_.words(side).col(ref.index);
    return {c.begin(), c.end()};
  }
  if (model_.mode == EmbeddingMode::Fixed) {
    return fixed_embedding(corpus_.numeral_values[ref.index], dim);
  }
  const auto& w = weights_[ref.index];
  const auto& m = model_.protos(side);
  std::vector<double> v(dim, 0.0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] == 0.0) continue;
    auto c = m.col(k);
    for (std::size_t d = 0; d < dim; ++d) v[d] += w[k] * static_cast<double>(c[d]);
  }
  return v;
}

template <class Real>
void SgnsTrainer<Real>::add_to(TokenRef ref, Side side, std::span<const double> delta) {
  if (!ref.is_numeral()) {
    auto c = model_.words(side).col(ref.index);
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += static_cast<Real>(delta[d]);
    return;
  }
  if (model_.mode == EmbeddingMode::Fixed) return;  // not trainable
  const auto& w = weights_[ref.index];
  auto& m = model_.protos(side);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] == 0.0) continue;
    auto c = m.col(k);
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += static_cast<Real>(w[k] * delta[d]);
  }
}

template <class Real>
double SgnsTrainer<Real>::pair_update(TokenRef center, TokenRef target,
                                      std::span<const TokenRef> negatives, double lr) {
  const std::size_t dim = model_.dim;
  const std::vector<double> in = embedding(center, Side::Input);
  std::vector<double> grad_in(dim, 0.0);
  std::vector<double> coeff(negatives.size() + 1);
  double loss = 0.0;

  for (std::size_t j = 0; j <= negatives.size(); ++j) {
    const TokenRef out_ref = j == 0 ? target : negatives[j - 1];
    const double label = j == 0 ? 1.0 : 0.0;
    const std::vector<double> out = embedding(out_ref, Side::Output);
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += in[d] * out[d];
    loss -= j == 0 ? log_sigmoid(s) : log_sigmoid(-s);
    coeff[j] = lr * (label - sigmoid(s));
    for (std::size_t d = 0; d < dim; ++d) grad_in[d] += coeff[j] * out[d];
  }

  std::vector<double> delta(dim);
  for (std::size_t j = 0; j <= negatives.size(); ++j) {
    const TokenRef out_ref = j == 0 ? target : negatives[j - 1];
    for (std::size_t d = 0; d < dim; ++d) delta[d] = coeff[j] * in[d];
    add_to(out_ref, Side::Output, delta);
  }
  add_to(center, Side::Input, grad_in);
  return loss;
}

template <class Real>
double SgnsTrainer<Real>::step(TokenRef center, std::span<const TokenRef> context, double lr,
                               Rng& rng) {
  std::vector<TokenRef> negatives(config_.negatives);
  double loss = 0.0;
  for (const TokenRef target : context) {
    for (auto& n : negatives) {
      n = sampler_.draw(rng);
      if (n == target) n = sampler_.draw(rng);
    }
    loss += pair_update(center, target, negatives, lr);
  }
  return loss;
}

template <class Real>
bool SgnsTrainer<Real>::parameters_finite() const {
  auto finite = [](const Matrix<Real>& m) {
    for (Real v : m.data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  };
  return finite(model_.word_in) && finite(model_.word_out) && finite(model_.proto_in) &&
         finite(model_.proto_out);
}

namespace {
constexpr std::uint64_t kFiniteCheckInterval = 10000;
}

template <class Real>
double SgnsTrainer<Real>::run_sentence(const std::vector<TokenRef>& sentence, double lr_start,
                                       std::uint64_t total_steps, std::uint64_t& done, Rng& rng) {
  const std::size_t n = sentence.size();
  const std::size_t c = config_.window;
  std::vector<TokenRef> context;
  context.reserve(2 * c);
  double loss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    context.clear();
    const std::size_t lo = t >= c ? t - c : 0;
    const std::size_t hi = std::min(n - 1, t + c);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != t) context.push_back(sentence[j]);
    }
    const double progress = static_cast<double>(done) / static_cast<double>(total_steps);
    const double lr = lr_start * (1.0 - 0.99 * std::min(progress, 1.0));
    if (!context.empty()) loss += step(sentence[t], context, lr, rng);
    ++done;
  }
  return loss;
}

template <class Real>
TrainStats SgnsTrainer<Real>::train() {
  TrainStats stats;
  const std::uint64_t total = std::max<std::uint64_t>(1, corpus_.positions() * config_.epochs);
  const auto n_sent = static_cast<std::ptrdiff_t>(corpus_.sentences.size());

  if (config_.threads <= 1) {
    Rng rng = Rng::for_stage(config_.seed, "sgns");
    std::uint64_t done = 0;
    std::uint64_t next_check = kFiniteCheckInterval;
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      double epoch_loss = 0.0;
      for (const auto& sentence : corpus_.sentences) {
        epoch_loss += run_sentence(sentence, config_.lr, total, done, rng);
        if (done >= next_check) {
          if (!parameters_finite()) {
            throw std::runtime_error("non-finite parameter after " + std::to_string(done) +
                                     " steps");
          }
          next_check = done + kFiniteCheckInterval;
        }
      }
      stats.epoch_loss.push_back(epoch_loss);
      stats.loss += epoch_loss;
    }
    stats.steps = done;
    return stats;
  }

  // Lock-free concurrent updates: racing column writes may be lost.
  std::atomic<std::uint64_t> progress{0};
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    double epoch_loss = 0.0;
#pragma omp parallel num_threads(static_cast<int>(config_.threads)) reduction(+ : epoch_loss)
    {
      Rng rng = Rng::for_stage(config_.seed, "sgns",
                               epoch * 1024 + static_cast<std::uint64_t>(omp_get_thread_num()));
#pragma omp for schedule(dynamic, 64)
      for (std::ptrdiff_t s = 0; s < n_sent; ++s) {
        std::uint64_t done = progress.load(std::memory_order_relaxed);
        const std::uint64_t before = done;
        epoch_loss += run_sentence(corpus_.sentences[s], config_.lr, total, done, rng);
        progress.fetch_add(done - before, std::memory_order_relaxed);
      }
    }
    if (!parameters_finite()) throw std::runtime_error("non-finite parameter after epoch");
    stats.epoch_loss.push_back(epoch_loss);
    stats.loss += epoch_loss;
  }
  stats.steps = progress.load();
  return stats;
}

template BasicEmbeddingModel<float> init_model<float>(Vocabulary, std::optional<PrototypeModel>,
                                                      const TrainConfig&);
template BasicEmbeddingModel<double> init_model<double>(Vocabulary, std::optional<PrototypeModel>,
                                                        const TrainConfig&);
template class SgnsTrainer<float>;
template class SgnsTrainer<double>;

EmbeddingModel train(std::span<const Sentence> corpus, const TrainConfig& config,
                     std::optional<PrototypeModel> prototypes, TrainStats* stats) {
  config.validate();
  VocabOptions vo;
  vo.mode = config.mode;
  vo.max_vocab = config.max_vocab;
  vo.min_count = config.min_count;
  vo.max_numerals = config.max_numeral_vocab;
  Vocabulary vocab = build_vocabulary(corpus, vo);
  TrainingCorpus resolved = resolve_corpus(corpus, vocab);

  EmbeddingModel model = init_model<float>(std::move(vocab), std::move(prototypes), config);
  SgnsTrainer<float> trainer(model, resolved, config);
  TrainStats s = trainer.train();
  if (stats) *stats = std::move(s);
  return model;
}

}  // namespace numem
