#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "numem/composer.hpp"
#include "numem/prototypes.hpp"

namespace numem {

// ---------------------------------------------------------------------------
// Numeral prediction

inline constexpr std::size_t kContextWords = 5;

/// A masked numeral with up to five words on each side.
struct EvalInstance {
  std::vector<std::string> context;
  double target = 0.0;
  std::string target_surface;
};

/// `left-context<TAB>TARGET<TAB>right-context` per line; TARGET must parse
/// as a numeral. Numerals in the context are dropped and each side is cut
/// to the `context_words` words nearest the target. Throws FormatError with
/// the offending line number.
std::vector<EvalInstance> read_prediction_fixture(std::istream& in,
                                                  std::size_t context_words = kContextWords);

/// Context words resolved to vocabulary indices, OOV words dropped.
std::vector<std::uint32_t> resolve_context(const EmbeddingModel& model,
                                           std::span<const std::string> context);

/// S_A: sum_j [ s(c_j|n) - log Z(n) ] with s(c|n) = <o_c, v>, v the
/// numeral's input embedding and Z(n) = sum over `context_vocab` of
/// exp s(c|n). Without normalization the log Z term is dropped.
double score_sa(std::span<const double> numeral_input, std::span<const std::uint32_t> context,
                const EmbeddingModel& model, std::span<const std::uint32_t> context_vocab,
                bool normalize);
double score_sa(double numeral, std::span<const std::uint32_t> context,
                const EmbeddingModel& model, std::span<const std::uint32_t> context_vocab,
                bool normalize);

/// S_B: sum_j <v, i_{c_j}> with v the numeral's output embedding. The
/// candidate-set partition is constant per instance and omitted.
double score_sb(std::span<const double> numeral_output, std::span<const std::uint32_t> context,
                const EmbeddingModel& model);
double score_sb(double numeral, std::span<const std::uint32_t> context,
                const EmbeddingModel& model);

struct RankReport {
  std::vector<std::size_t> ranks;
  std::vector<double> errors;       // n_i - top-1
  std::vector<double> pct_errors;   // NaN where n_i == 0
  double avgr = 0.0;
  double mdae = 0.0;
  double mdape = 0.0;
  std::size_t zero_targets = 0;     // excluded from MdAPE
};

/// Ranks candidates by descending score per instance. Ties go to the
/// smaller numeral value, then to the earlier candidate. `scores` is
/// instances x candidates, row-major. Every truth must be a candidate.
RankReport rank_and_report(std::span<const double> truths, std::span<const double> candidates,
                           std::span<const double> scores);

using PairScorer = std::function<double(std::size_t instance, std::size_t candidate)>;
RankReport rank_and_report(std::span<const double> truths, std::span<const double> candidates,
                           const PairScorer& scorer);

enum class ScoreKind { SA, SB };

struct PredictionOptions {
  ScoreKind score = ScoreKind::SA;
  bool normalize = false;
  bool full_vocab = false;  // S_A partition over the whole word vocabulary
  Execution execution = Execution::Parallel;
};

struct PredictionResult {
  RankReport report;
  std::vector<double> candidates;
  std::size_t skipped = 0;  // instances with no in-vocabulary context
};

/// Scores every instance against the distinct instance targets.
PredictionResult evaluate_numeral_prediction(const EmbeddingModel& model,
                                             std::span<const EvalInstance> instances,
                                             const PredictionOptions& options);

// ---------------------------------------------------------------------------
// Magnitude / numeration contrast tests

enum class Distance { Euclidean, Cosine };

double vector_distance(std::span<const double> a, std::span<const double> b, Distance distance);

struct ContrastItem {
  double value = 0.0;
  std::vector<double> vec;
};

struct ContrastReport {
  double ova = 0.0;  // percentages
  double sc = 0.0;
  double bc = 0.0;
  double avgr = 0.0;
  std::size_t targets = 0;
  std::size_t nearest_ties = 0;
};

/// For every target, finds its nearest, second-nearest and furthest
/// candidates on the number line and checks that the nearest is also
/// strictly closest in embedding space (OVA: than every other candidate;
/// SC: than the second nearest; BC: than the furthest). Candidates whose
/// value equals the target are skipped when `exclude_equal` is set. When
/// several candidates tie as number-line nearest, each is tried and a test
/// passes if any choice passes. AVGR is the mean embedding-distance rank of
/// the nearest neighbour, with ties sharing the average rank.
ContrastReport contrast_tests(std::span<const ContrastItem> targets,
                              std::span<const ContrastItem> candidates, Distance distance,
                              bool exclude_equal);

using NumeralEmbedder = std::function<std::vector<double>(double)>;

/// Each value in `set` is a target evaluated against the rest of the set.
ContrastReport ova_sc_bc(std::span<const double> set, const NumeralEmbedder& embed,
                         Distance distance = Distance::Euclidean);

struct LexiconEntry {
  std::string word;
  double value = 0.0;
};

/// `word<TAB>value` lines.
std::vector<LexiconEntry> read_lexicon(std::istream& in);

struct NumerationResult {
  ContrastReport report;
  std::size_t dropped_words = 0;
};

/// Numeral targets against number words placed on the number line by their
/// lexicon values and embedded by word lookup (input side).
NumerationResult numeration_eval(std::span<const double> targets,
                                 std::span<const LexiconEntry> lexicon,
                                 const EmbeddingModel& model,
                                 Distance distance = Distance::Euclidean);

// ---------------------------------------------------------------------------
// Order-of-magnitude classification

inline constexpr std::size_t kMagnitudeClasses = 8;
inline constexpr std::size_t kMetaSamples = 100;

/// floor(log10 |n|) clamped to [0, 7].
std::size_t magnitude_class_of(double n);

/// `numeral<TAB>class` lines, class in 0..7.
std::vector<std::pair<double, std::size_t>> read_magnitude_classes(std::istream& in);

/// Mean of the composed embeddings of up to `samples` numerals drawn per
/// class (without replacement, seeded). Classes with no numerals get zeros.
std::vector<std::vector<double>> class_meta_embeddings(
    const EmbeddingModel& model, std::span<const std::pair<double, std::size_t>> labeled,
    Side side, std::uint64_t seed, std::size_t samples = kMetaSamples);

/// Argmax over classes of the score with the numeral embedding replaced by
/// each meta-embedding. Ties go to the lowest class index.
std::size_t magnitude_class_predict(std::span<const double> class_scores);

struct ClassificationReport {
  double avgr = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::size_t instances = 0;
  std::size_t skipped = 0;
};

ClassificationReport evaluate_magnitude_classes(
    const EmbeddingModel& model, std::span<const EvalInstance> instances,
    std::span<const std::pair<double, std::size_t>> labeled, ScoreKind score, bool normalize,
    std::uint64_t seed);

/// Micro and macro F1 for single-label predictions.
std::pair<double, double> f1_scores(std::span<const std::size_t> truth,
                                    std::span<const std::size_t> predicted, std::size_t classes);

// ---------------------------------------------------------------------------
// Word similarity

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> predicted, std::span<const double> gold);

struct WordSimResult {
  double rho = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
};

/// Lines `word1 word2 score` (tabs or spaces); cosine of input embeddings.
WordSimResult evaluate_word_similarity(const EmbeddingModel& model, std::istream& in);

// ---------------------------------------------------------------------------
// Reports

/// Ordered key/value pairs written as an aligned table or `key=value` lines.
struct Report {
  std::string title;
  std::vector<std::pair<std::string, std::string>> fields;

  void add(std::string key, double value);
  void add(std::string key, std::string value);
  void write_table(std::ostream& out) const;
  void write_kv(std::ostream& out) const;
};

}  // namespace numem
