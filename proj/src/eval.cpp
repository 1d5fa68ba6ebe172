#include "numem/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "numem/errors.hpp"
#include "numem/kernels.hpp"
#include "numem/mathutil.hpp"
#include "numem/rng.hpp"

namespace numem {

namespace {

std::vector<double> to_double(const std::vector<float>& v) { return {v.begin(), v.end()}; }

std::vector<std::string> context_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(text)) {
    if (!tok.is_numeral()) out.push_back(std::move(tok.surface));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

double dot(std::span<const double> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * static_cast<double>(b[d]);
  return s;
}

std::vector<std::uint32_t> default_context_vocab(std::span<const std::vector<std::uint32_t>> ctxs) {
  std::vector<std::uint32_t> v;
  for (const auto& c : ctxs) v.insert(v.end(), c.begin(), c.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::uint32_t> full_word_vocab(const EmbeddingModel& model) {
  std::vector<std::uint32_t> v;
  for (auto i = static_cast<std::uint32_t>(model.vocab.reserved_count()); i < model.vocab.size();
       ++i) {
    if (!model.vocab.entry(i).numeral) v.push_back(i);
  }
  return v;
}

}  // namespace

std::vector<EvalInstance> read_prediction_fixture(std::istream& in, std::size_t context_words_n) {
  std::vector<EvalInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw FormatError("expected left-context<TAB>TARGET<TAB>right-context", lineno);
    }
    EvalInstance inst;
    const auto target = trim(fields[1]);
    const auto value = parse_numeral(target);
    if (!value) throw FormatError("target is not a numeral: '" + std::string(target) + "'", lineno);
    inst.target = *value;
    inst.target_surface = std::string(target);

    auto left = context_words(fields[0]);
    auto right = context_words(fields[2]);
    if (left.size() > context_words_n) left.erase(left.begin(), left.end() - static_cast<std::ptrdiff_t>(context_words_n));
    if (right.size() > context_words_n) right.resize(context_words_n);
    inst.context = std::move(left);
    inst.context.insert(inst.context.end(), right.begin(), right.end());
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<std::uint32_t> resolve_context(const EmbeddingModel& model,
                                           std::span<const std::string> context) {
  std::vector<std::uint32_t> out;
  for (const auto& w : context) {
    auto idx = model.vocab.find(w);
    if (idx && !model.vocab.entry(*idx).numeral && *idx >= model.vocab.reserved_count()) {
      out.push_back(*idx);
    }
  }
  return out;
}

double score_sa(std::span<const double> numeral_input, std::span<const std::uint32_t> context,
                const EmbeddingModel& model, std::span<const std::uint32_t> context_vocab,
                bool normalize) {
  double total = 0.0;
  for (auto c : context) total += dot(numeral_input, model.word_out.col(c));
  if (normalize) {
    std::vector<double> s;
    s.reserve(context_vocab.size());
    for (auto c : context_vocab) s.push_back(dot(numeral_input, model.word_out.col(c)));
    total -= static_cast<double>(context.size()) * log_sum_exp(s);
  }
  return total;
}

double score_sa(double numeral, std::span<const std::uint32_t> context,
                const EmbeddingModel& model, std::span<const std::uint32_t> context_vocab,
                bool normalize) {
  const auto v = to_double(numeral_vector(model, numeral, Side::Input));
  return score_sa(v, context, model, context_vocab, normalize);
}

double score_sb(std::span<const double> numeral_output, std::span<const std::uint32_t> context,
                const EmbeddingModel& model) {
  double total = 0.0;
  for (auto c : context) total += dot(numeral_output, model.word_in.col(c));
  return total;
}

double score_sb(double numeral, std::span<const std::uint32_t> context,
                const EmbeddingModel& model) {
  const auto v = to_double(numeral_vector(model, numeral, Side::Output));
  return score_sb(v, context, model);
}

RankReport rank_and_report(std::span<const double> truths, std::span<const double> candidates,
                           std::span<const double> scores) {
  if (truths.empty()) throw InputError("no evaluation instances");
  const std::size_t n_c = candidates.size();
  if (scores.size() != truths.size() * n_c) throw InputError("score matrix shape mismatch");

  // a precedes b: higher score, then smaller value, then earlier index.
  auto precedes = [&](std::span<const double> row, std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    if (candidates[a] != candidates[b]) return candidates[a] < candidates[b];
    return a < b;
  };

  RankReport r;
  std::vector<double> abs_err, abs_pct;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto row = scores.subspan(i * n_c, n_c);
    const auto it = std::find(candidates.begin(), candidates.end(), truths[i]);
    if (it == candidates.end()) throw InputError("true numeral missing from candidate set");
    const auto t = static_cast<std::size_t>(it - candidates.begin());

    std::size_t rank = 1;
    std::size_t top = 0;
    for (std::size_t c = 0; c < n_c; ++c) {
      if (c != t && precedes(row, c, t)) ++rank;
      if (c != top && precedes(row, c, top)) top = c;
    }
    const double e = truths[i] - candidates[top];
    r.ranks.push_back(rank);
    r.errors.push_back(e);
    abs_err.push_back(std::fabs(e));
    if (truths[i] == 0.0) {
      ++r.zero_targets;
      r.pct_errors.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      const double pe = e / truths[i];
      r.pct_errors.push_back(pe);
      abs_pct.push_back(std::fabs(pe));
    }
  }
  r.avgr = std::accumulate(r.ranks.begin(), r.ranks.end(), 0.0) / static_cast<double>(r.ranks.size());
  r.mdae = median(std::move(abs_err));
  r.mdape = median(std::move(abs_pct));
  return r;
}

RankReport rank_and_report(std::span<const double> truths, std::span<const double> candidates,
                           const PairScorer& scorer) {
  std::vector<double> scores(truths.size() * candidates.size());
  for (std::size_t i = 0; i < truths.size(); ++i) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      scores[i * candidates.size() + c] = scorer(i, c);
    }
  }
  return rank_and_report(truths, candidates, scores);
}

PredictionResult evaluate_numeral_prediction(const EmbeddingModel& model,
                                             std::span<const EvalInstance> instances,
                                             const PredictionOptions& options) {
  PredictionResult result;
  std::vector<std::vector<std::uint32_t>> contexts;
  std::vector<double> truths;
  for (const auto& inst : instances) {
    auto ctx = resolve_context(model, inst.context);
    if (ctx.empty()) {
      ++result.skipped;
      continue;
    }
    contexts.push_back(std::move(ctx));
    truths.push_back(inst.target);
    if (std::find(result.candidates.begin(), result.candidates.end(), inst.target) ==
        result.candidates.end()) {
      result.candidates.push_back(inst.target);
    }
  }
  if (truths.empty()) throw InputError("no instance has an in-vocabulary context word");

  const std::size_t dim = model.dim;
  const std::size_t n_i = truths.size();
  const std::size_t n_c = result.candidates.size();
  const bool sa = options.score == ScoreKind::SA;
  const Side numeral_side = sa ? Side::Input : Side::Output;
  const auto& context_matrix = sa ? model.word_out : model.word_in;

  std::vector<double> keys(n_c * dim);
  for (std::size_t c = 0; c < n_c; ++c) {
    const auto v = numeral_vector(model, result.candidates[c], numeral_side);
    std::copy(v.begin(), v.end(), keys.begin() + static_cast<std::ptrdiff_t>(c * dim));
  }
  std::vector<double> queries(n_i * dim, 0.0);
  std::vector<double> scale(n_i);
  for (std::size_t i = 0; i < n_i; ++i) {
    for (auto w : contexts[i]) {
      auto col = context_matrix.col(w);
      for (std::size_t d = 0; d < dim; ++d) queries[i * dim + d] += static_cast<double>(col[d]);
    }
    scale[i] = static_cast<double>(contexts[i].size());
  }

  const bool parallel = options.execution == Execution::Parallel;
  std::vector<double> bias;
  if (sa && options.normalize) {
    const auto vocab = options.full_vocab ? full_word_vocab(model) : default_context_vocab(contexts);
    std::vector<double> rows(vocab.size() * dim);
    for (std::size_t r = 0; r < vocab.size(); ++r) {
      auto col = model.word_out.col(vocab[r]);
      std::copy(col.begin(), col.end(), rows.begin() + static_cast<std::ptrdiff_t>(r * dim));
    }
    bias.resize(n_c);
    if (parallel) {
      kernels::log_partition_parallel(keys, rows, dim, bias);
    } else {
      kernels::log_partition_serial(keys, rows, dim, bias);
    }
  }

  std::vector<double> scores(n_i * n_c);
  if (parallel) {
    kernels::affine_scores_parallel(queries, scale, keys, bias, dim, scores);
  } else {
    kernels::affine_scores_serial(queries, scale, keys, bias, dim, scores);
  }
  result.report = rank_and_report(truths, result.candidates, scores);
  return result;
}

double vector_distance(std::span<const double> a, std::span<const double> b, Distance distance) {
  if (distance == Distance::Euclidean) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(s);
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    ab += a[d] * b[d];
    aa += a[d] * a[d];
    bb += b[d] * b[d];
  }
  if (aa == 0.0 || bb == 0.0) return 1.0;
  return 1.0 - ab / std::sqrt(aa * bb);
}

ContrastReport contrast_tests(std::span<const ContrastItem> targets,
                              std::span<const ContrastItem> candidates, Distance distance,
                              bool exclude_equal) {
  ContrastReport rep;
  std::size_t ova = 0, sc = 0, bc = 0;
  double rank_sum = 0.0;
  std::vector<double> line, emb;
  for (const auto& t : targets) {
    line.clear();
    emb.clear();
    for (const auto& c : candidates) {
      if (exclude_equal && c.value == t.value) continue;
      line.push_back(std::fabs(c.value - t.value));
      emb.push_back(vector_distance(t.vec, c.vec, distance));
    }
    const std::size_t n = line.size();
    if (n < 2) continue;
    ++rep.targets;

    const double nearest = *std::min_element(line.begin(), line.end());
    std::size_t tied = 0;
    bool ova_ok = false, sc_ok = false, bc_ok = false;
    double best_rank = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      if (line[a] != nearest) continue;
      ++tied;
      double second = std::numeric_limits<double>::infinity();
      double furthest = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == a) continue;
        second = std::min(second, line[i]);
        furthest = std::max(furthest, line[i]);
      }
      bool o = true, s = true, b = true;
      double less = 0.0, equal = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == a) continue;
        const bool closer = emb[a] < emb[i];
        o = o && closer;
        if (line[i] == second) s = s && closer;
        if (line[i] == furthest) b = b && closer;
        if (emb[i] < emb[a]) less += 1.0;
        if (emb[i] == emb[a]) equal += 1.0;
      }
      ova_ok = ova_ok || o;
      sc_ok = sc_ok || s;
      bc_ok = bc_ok || b;
      best_rank = std::min(best_rank, 1.0 + less + 0.5 * equal);
    }
    if (tied > 1) ++rep.nearest_ties;
    ova += ova_ok;
    sc += sc_ok;
    bc += bc_ok;
    rank_sum += best_rank;
  }
  if (rep.targets > 0) {
    const auto n = static_cast<double>(rep.targets);
    rep.ova = 100.0 * static_cast<double>(ova) / n;
    rep.sc = 100.0 * static_cast<double>(sc) / n;
    rep.bc = 100.0 * static_cast<double>(bc) / n;
    rep.avgr = rank_sum / n;
  }
  return rep;
}

ContrastReport ova_sc_bc(std::span<const double> set, const NumeralEmbedder& embed,
                         Distance distance) {
  if (set.size() < 3) throw InputError("contrast tests need at least three numerals");
  std::vector<ContrastItem> items;
  items.reserve(set.size());
  for (double v : set) items.push_back({v, embed(v)});
  return contrast_tests(items, items, distance, true);
}

std::vector<LexiconEntry> read_lexicon(std::istream& in) {
  std::vector<LexiconEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) throw FormatError("expected word<TAB>value", lineno);
    const auto value = parse_numeral(trim(fields[1]));
    if (!value) throw FormatError("lexicon value is not a number", lineno);
    out.push_back({std::string(trim(fields[0])), *value});
  }
  return out;
}

NumerationResult numeration_eval(std::span<const double> targets,
                                 std::span<const LexiconEntry> lexicon,
                                 const EmbeddingModel& model, Distance distance) {
  NumerationResult res;
  std::vector<ContrastItem> words;
  for (const auto& e : lexicon) {
    auto idx = model.vocab.find(e.word);
    if (!idx || model.vocab.entry(*idx).numeral || *idx < model.vocab.reserved_count()) {
      ++res.dropped_words;
      continue;
    }
    words.push_back({e.value, to_double(word_vector(model, *idx, Side::Input))});
  }
  std::vector<ContrastItem> numerals;
  for (double t : targets) numerals.push_back({t, to_double(numeral_vector(model, t, Side::Input))});
  res.report = contrast_tests(numerals, words, distance, false);
  return res;
}

std::size_t magnitude_class_of(double n) {
  const double a = std::fabs(n);
  if (a < 10.0) return 0;
  const auto c = static_cast<long>(std::floor(std::log10(a)));
  return static_cast<std::size_t>(std::clamp<long>(c, 0, kMagnitudeClasses - 1));
}

std::vector<std::pair<double, std::size_t>> read_magnitude_classes(std::istream& in) {
  std::vector<std::pair<double, std::size_t>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) throw FormatError("expected numeral<TAB>class", lineno);
    const auto value = parse_numeral(trim(fields[0]));
    const auto cls = parse_numeral(trim(fields[1]));
    if (!value || !cls || *cls < 0 || *cls >= static_cast<double>(kMagnitudeClasses) ||
        *cls != std::floor(*cls)) {
      throw FormatError("malformed magnitude-class line", lineno);
    }
    out.emplace_back(*value, static_cast<std::size_t>(*cls));
  }
  return out;
}

std::vector<std::vector<double>> class_meta_embeddings(
    const EmbeddingModel& model, std::span<const std::pair<double, std::size_t>> labeled,
    Side side, std::uint64_t seed, std::size_t samples) {
  std::vector<std::vector<double>> members(kMagnitudeClasses);
  for (const auto& [v, c] : labeled) members.at(c).push_back(v);
  Rng rng = Rng::for_stage(seed, "meta-embeddings");
  std::vector<std::vector<double>> metas(kMagnitudeClasses, std::vector<double>(model.dim, 0.0));
  for (std::size_t c = 0; c < kMagnitudeClasses; ++c) {
    auto& pool = members[c];
    rng.shuffle(std::span<double>(pool));
    const std::size_t take = std::min(samples, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      const auto v = numeral_vector(model, pool[i], side);
      for (std::size_t d = 0; d < model.dim; ++d) metas[c][d] += static_cast<double>(v[d]);
    }
    if (take > 0) {
      for (auto& x : metas[c]) x /= static_cast<double>(take);
    }
  }
  return metas;
}

std::size_t magnitude_class_predict(std::span<const double> class_scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < class_scores.size(); ++c) {
    if (class_scores[c] > class_scores[best]) best = c;
  }
  return best;
}

std::pair<double, double> f1_scores(std::span<const std::size_t> truth,
                                    std::span<const std::size_t> predicted, std::size_t classes) {
  std::vector<double> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) {
      tp[truth[i]] += 1;
    } else {
      fp[predicted[i]] += 1;
      fn[truth[i]] += 1;
    }
  }
  const double total_tp = std::accumulate(tp.begin(), tp.end(), 0.0);
  const double micro = truth.empty() ? 0.0 : total_tp / static_cast<double>(truth.size());
  double macro = 0.0;
  std::size_t seen = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;
    ++seen;
    macro += 2.0 * tp[c] / (2.0 * tp[c] + fp[c] + fn[c]);
  }
  return {micro, seen ? macro / static_cast<double>(seen) : 0.0};
}

ClassificationReport evaluate_magnitude_classes(
    const EmbeddingModel& model, std::span<const EvalInstance> instances,
    std::span<const std::pair<double, std::size_t>> labeled, ScoreKind score, bool normalize,
    std::uint64_t seed) {
  ClassificationReport rep;
  std::unordered_map<double, std::size_t> label_of;
  for (const auto& [v, c] : labeled) label_of.emplace(v, c);

  std::vector<std::vector<std::uint32_t>> contexts;
  std::vector<std::size_t> truth;
  for (const auto& inst : instances) {
    auto ctx = resolve_context(model, inst.context);
    if (ctx.empty()) {
      ++rep.skipped;
      continue;
    }
    contexts.push_back(std::move(ctx));
    auto it = label_of.find(inst.target);
    truth.push_back(it != label_of.end() ? it->second : magnitude_class_of(inst.target));
  }
  if (contexts.empty()) throw InputError("no instance has an in-vocabulary context word");

  const bool sa = score == ScoreKind::SA;
  const auto metas =
      class_meta_embeddings(model, labeled, sa ? Side::Input : Side::Output, seed);
  const auto vocab = default_context_vocab(contexts);

  std::vector<std::size_t> predicted;
  double rank_sum = 0.0;
  std::vector<double> s(kMagnitudeClasses);
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    for (std::size_t c = 0; c < kMagnitudeClasses; ++c) {
      s[c] = sa ? score_sa(metas[c], contexts[i], model, vocab, normalize)
                : score_sb(metas[c], contexts[i], model);
    }
    predicted.push_back(magnitude_class_predict(s));
    const std::size_t t = truth[i];
    std::size_t rank = 1;
    for (std::size_t c = 0; c < kMagnitudeClasses; ++c) {
      if (s[c] > s[t] || (s[c] == s[t] && c < t)) ++rank;
    }
    rank_sum += static_cast<double>(rank);
  }
  rep.instances = contexts.size();
  rep.avgr = rank_sum / static_cast<double>(rep.instances);
  std::tie(rep.micro_f1, rep.macro_f1) = f1_scores(truth, predicted, kMagnitudeClasses);
  return rep;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> predicted, std::span<const double> gold) {
  if (predicted.size() != gold.size()) throw InputError("spearman: length mismatch");
  if (predicted.size() < 2) throw InputError("spearman: need at least two pairs");
  const auto rx = average_ranks(predicted);
  const auto ry = average_ranks(gold);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

WordSimResult evaluate_word_similarity(const EmbeddingModel& model, std::istream& in) {
  WordSimResult res;
  std::vector<double> predicted, gold;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    double score = 0.0;
    if (!(row >> a >> b >> score)) throw FormatError("expected word1 word2 score", lineno);
    auto ia = model.vocab.find(a);
    auto ib = model.vocab.find(b);
    if (!ia || !ib) {
      ++res.skipped;
      continue;
    }
    const auto va = to_double(word_vector(model, *ia, Side::Input));
    const auto vb = to_double(word_vector(model, *ib, Side::Input));
    predicted.push_back(1.0 - vector_distance(va, vb, Distance::Cosine));
    gold.push_back(score);
  }
  res.pairs = predicted.size();
  res.rho = spearman(predicted, gold);
  return res;
}

void Report::add(std::string key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  fields.emplace_back(std::move(key), buf);
}

void Report::add(std::string key, std::string value) {
  fields.emplace_back(std::move(key), std::move(value));
}

void Report::write_table(std::ostream& out) const {
  std::size_t width = 0;
  for (const auto& [k, v] : fields) width = std::max(width, k.size());
  if (!title.empty()) out << title << '\n';
  for (const auto& [k, v] : fields) {
    out << "  " << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  }
}

void Report::write_kv(std::ostream& out) const {
  for (const auto& [k, v] : fields) out << k << '=' << v << '\n';
}

}  // namespace numem
