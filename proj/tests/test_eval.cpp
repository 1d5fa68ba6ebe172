#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "numem/errors.hpp"
#include "numem/eval.hpp"
#include "numem/mathutil.hpp"
#include "numem/rng.hpp"

using namespace numem;
using doctest::Approx;

namespace {

// Prototype-mode model with random matrices; prototypes at 1, 10, 100, 1000.
EmbeddingModel tiny_model(std::uint64_t seed, std::size_t dim,
                          std::vector<std::string> words = {"a", "b", "c"}) {
  Rng rng(seed);
  EmbeddingModel m;
  m.mode = EmbeddingMode::Prototype;
  m.dim = dim;
  for (auto& w : words) m.vocab.add({w, 1, false});
  m.prototypes = PrototypeModel{};
  for (double p : {1.0, 10.0, 100.0, 1000.0}) m.prototypes->values.push_back(squash(p));
  m.word_in = Matrix<float>(dim, m.vocab.size());
  m.word_out = Matrix<float>(dim, m.vocab.size());
  m.proto_in = Matrix<float>(dim, 4);
  m.proto_out = Matrix<float>(dim, 4);
  for (auto* x : {&m.word_in, &m.word_out, &m.proto_in, &m.proto_out}) {
    for (auto& v : x->data) v = static_cast<float>(rng.normal());
  }
  return m;
}

std::vector<double> as_double(const std::vector<float>& v) { return {v.begin(), v.end()}; }

double dot(const std::vector<double>& a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> line_embed(double n) { return {n}; }

}  // namespace

TEST_CASE("prediction fixture parsing") {
  std::istringstream in(
      "one two 3 three four five six seven\t1,500\teight 9 nine ten eleven twelve thirteen\n"
      "\n"
      "left\t-2.5\t\n");
  const auto inst = read_prediction_fixture(in);
  REQUIRE(inst.size() == 2);
  CHECK(inst[0].target == 1500.0);
  CHECK(inst[0].target_surface == "1,500");
  CHECK(inst[0].context == std::vector<std::string>{"three", "four", "five", "six", "seven",
                                                    "eight", "nine", "ten", "eleven", "twelve"});
  CHECK(inst[1].context == std::vector<std::string>{"left"});

  std::istringstream bad("a\t1\tb\na\t1\tb\na\t1\tb\na\t1\tb\na\t1\tb\na\t1\tb\na 1 b\n");
  try {
    read_prediction_fixture(bad);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 7);
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
  std::istringstream nan_target("a\tmany\tb\n");
  CHECK_THROWS_AS(read_prediction_fixture(nan_target), FormatError);
}

TEST_CASE("resolve_context drops OOV and reserved words") {
  const auto m = tiny_model(1, 3);
  const std::vector<std::string> ctx = {"a", "zzz", "<unk>", "c"};
  CHECK(resolve_context(m, ctx) == std::vector<std::uint32_t>{1, 3});
}

TEST_CASE("score_sa") {
  const auto m = tiny_model(2, 4);
  const auto v = as_double(numeral_vector(m, 37.0, Side::Input));
  const std::vector<std::uint32_t> one = {2};
  CHECK(score_sa(37.0, one, m, one, false) == Approx(dot(v, m.word_out.col(2))).epsilon(1e-12));
  CHECK(score_sa(37.0, one, m, one, true) == Approx(0.0).scale(1.0));

  const std::vector<std::uint32_t> ctx = {1, 3, 3};
  const std::vector<std::uint32_t> vocab = {1, 2, 3};
  double brute = 0.0;
  for (auto c : ctx) {
    double z = 0.0;
    for (auto w : vocab) z += std::exp(dot(v, m.word_out.col(w)));
    brute += std::log(std::exp(dot(v, m.word_out.col(c))) / z);
  }
  CHECK(score_sa(37.0, ctx, m, vocab, true) == Approx(brute).epsilon(1e-12));
}

TEST_CASE("score_sb") {
  const auto m = tiny_model(3, 4);
  const auto o = as_double(numeral_vector(m, 250.0, Side::Output));
  const std::vector<std::uint32_t> one = {1};
  CHECK(score_sb(250.0, one, m) == Approx(dot(o, m.word_in.col(1))).epsilon(1e-12));

  // Argmax agrees with a full softmax over the candidate set.
  const std::vector<double> cands = {2.0, 15.0, 80.0, 300.0, 5000.0};
  const std::vector<std::uint32_t> ctx = {1, 2, 3};
  std::vector<double> sb, full;
  for (double n : cands) sb.push_back(score_sb(n, ctx, m));
  for (double n : cands) {
    double total = 0.0;
    for (auto c : ctx) {
      std::vector<double> logits;
      for (double k : cands) logits.push_back(dot(as_double(numeral_vector(m, k, Side::Output)), m.word_in.col(c)));
      total += dot(as_double(numeral_vector(m, n, Side::Output)), m.word_in.col(c)) - log_sum_exp(logits);
    }
    full.push_back(total);
  }
  CHECK(std::max_element(sb.begin(), sb.end()) - sb.begin() ==
        std::max_element(full.begin(), full.end()) - full.begin());
}

TEST_CASE("rank_and_report hand cases") {
  const std::vector<double> truths = {10, 20, 30};
  const std::vector<double> cands = {10, 20, 30};
  auto perfect = rank_and_report(truths, cands, [&](std::size_t i, std::size_t c) {
    return c == i ? 1.0 : 0.0;
  });
  CHECK(perfect.avgr == 1.0);
  CHECK(perfect.mdae == 0.0);
  CHECK(perfect.mdape == 0.0);

  // top-1 predictions 10, 15, 33 for truths 10, 20, 30: errors {0, 5, -3}.
  const std::vector<double> c2 = {10, 15, 20, 30, 33};
  const std::vector<double> best = {10, 15, 33};
  const auto r = rank_and_report(truths, c2, [&](std::size_t i, std::size_t c) {
    return c2[c] == best[i] ? 1.0 : 0.0;
  });
  CHECK(r.errors == std::vector<double>{0, 5, -3});
  CHECK(r.mdae == 3.0);
  CHECK(r.mdape == Approx(0.1));
  CHECK(r.ranks == std::vector<std::size_t>{1, 3, 5});

  // zero target excluded from MdAPE
  const std::vector<double> zt = {0, 4};
  const std::vector<double> zc = {0, 4, 5};
  const auto z = rank_and_report(zt, zc, [&](std::size_t, std::size_t c) { return zc[c] == 5 ? 1.0 : 0.0; });
  CHECK(z.zero_targets == 1);
  CHECK(std::isnan(z.pct_errors[0]));
  CHECK(z.mdape == Approx(0.25));

  // ties go to the smaller value
  const std::vector<double> tc = {7, 3, 5};
  const auto t = rank_and_report(std::vector<double>{7}, tc, [](std::size_t, std::size_t) { return 0.0; });
  CHECK(t.ranks[0] == 3);
  CHECK(t.errors[0] == 4.0);

  CHECK_THROWS_AS(rank_and_report(std::vector<double>{99}, tc, [](std::size_t, std::size_t) { return 0.0; }),
                  InputError);
}

TEST_CASE("rank_and_report matches a brute-force sort") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_c = 1 + rng.below(12), n_i = 1 + rng.below(6);
    std::vector<double> cands(n_c);
    for (auto& c : cands) c = static_cast<double>(rng.below(8));  // duplicates allowed
    std::vector<double> truths(n_i), scores(n_i * n_c);
    for (auto& t : truths) t = cands[rng.below(n_c)];
    for (auto& s : scores) s = static_cast<double>(rng.below(4));  // many ties
    const auto r = rank_and_report(truths, cands, scores);

    double sum = 0.0;
    for (std::size_t i = 0; i < n_i; ++i) {
      std::vector<std::size_t> order(n_c);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = scores[i * n_c + a], sb = scores[i * n_c + b];
        if (sa != sb) return sa > sb;
        if (cands[a] != cands[b]) return cands[a] < cands[b];
        return a < b;
      });
      const auto first_truth = std::find(cands.begin(), cands.end(), truths[i]) - cands.begin();
      const auto pos = std::find(order.begin(), order.end(), static_cast<std::size_t>(first_truth)) - order.begin();
      CHECK(r.ranks[i] == static_cast<std::size_t>(pos) + 1);
      CHECK(r.errors[i] == truths[i] - cands[order[0]]);
      sum += static_cast<double>(pos + 1);
    }
    CHECK(r.avgr == Approx(sum / n_i));
  }
}

TEST_CASE("MdAE and MdAPE ignore instance order; S_B ranks ignore a constant shift") {
  const std::vector<double> truths = {5, 40, 300, 7, 12};
  const std::vector<double> cands = {5, 7, 12, 40, 300};
  Rng rng(6);
  std::vector<double> scores(truths.size() * cands.size());
  for (auto& s : scores) s = rng.normal();
  const auto r = rank_and_report(truths, cands, scores);
  std::vector<std::size_t> perm = {3, 0, 4, 2, 1};
  std::vector<double> pt, ps;
  for (auto i : perm) {
    pt.push_back(truths[i]);
    ps.insert(ps.end(), scores.begin() + i * 5, scores.begin() + i * 5 + 5);
  }
  const auto rp = rank_and_report(pt, cands, ps);
  CHECK(rp.mdae == r.mdae);
  CHECK(rp.mdape == r.mdape);
  CHECK(rp.avgr == Approx(r.avgr));
  for (auto& s : scores) s += 123.0;
  const auto shifted = rank_and_report(truths, cands, scores);
  CHECK(shifted.ranks == r.ranks);
}

TEST_CASE("evaluate_numeral_prediction matches per-instance scoring") {
  const auto m = tiny_model(5, 6, {"a", "b", "c", "d", "e"});
  std::vector<EvalInstance> inst;
  Rng rng(7);
  const char* words[] = {"a", "b", "c", "d", "e", "oov"};
  for (int i = 0; i < 25; ++i) {
    EvalInstance e;
    e.target = std::floor(std::exp(rng.uniform(0.0, 8.0)));
    for (int j = 0; j < 4; ++j) e.context.push_back(words[rng.below(6)]);
    inst.push_back(e);
  }
  inst.push_back({{"oov"}, 3.0, "3"});

  for (auto score : {ScoreKind::SA, ScoreKind::SB}) {
    for (bool normalize : {false, true}) {
      for (bool full : {false, true}) {
        PredictionOptions o;
        o.score = score;
        o.normalize = normalize;
        o.full_vocab = full;
        o.execution = Execution::Serial;
        const auto serial = evaluate_numeral_prediction(m, inst, o);
        o.execution = Execution::Parallel;
        const auto parallel = evaluate_numeral_prediction(m, inst, o);
        CHECK(serial.skipped == 1);
        CHECK(serial.report.ranks == parallel.report.ranks);

        std::vector<std::vector<std::uint32_t>> ctx;
        std::vector<double> truths;
        for (const auto& e : inst) {
          auto c = resolve_context(m, e.context);
          if (c.empty()) continue;
          ctx.push_back(c);
          truths.push_back(e.target);
        }
        std::vector<std::uint32_t> vocab;
        if (full) {
          vocab = {1, 2, 3, 4, 5};
        } else {
          for (auto& c : ctx) vocab.insert(vocab.end(), c.begin(), c.end());
          std::sort(vocab.begin(), vocab.end());
          vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
        }
        const auto& cands = serial.candidates;
        const auto ref = rank_and_report(truths, cands, [&](std::size_t i, std::size_t c) {
          return score == ScoreKind::SA ? score_sa(cands[c], ctx[i], m, vocab, normalize)
                                        : score_sb(cands[c], ctx[i], m);
        });
        CHECK(serial.report.avgr == Approx(ref.avgr));
        CHECK(serial.report.ranks == ref.ranks);
      }
    }
  }
}

TEST_CASE("contrast tests: identity line is perfect") {
  const std::vector<double> set = {-40, 1, 2, 3.5, 7, 19, 100, 1e4};
  const auto r = ova_sc_bc(set, line_embed);
  CHECK(r.ova == 100.0);
  CHECK(r.sc == 100.0);
  CHECK(r.bc == 100.0);
  CHECK(r.avgr == 1.0);
  CHECK(r.targets == set.size());
}

TEST_CASE("contrast tests: fixed-embedding counterexample") {
  auto fixed = [](double n) { return fixed_embedding(n, 8); };
  const std::vector<ContrastItem> target = {{10.0, fixed(10.0)}};
  const std::vector<ContrastItem> cands = {{1.0, fixed(1.0)}, {25.0, fixed(25.0)}};
  const double z = 16.0;
  CHECK(vector_distance(target[0].vec, cands[0].vec, Distance::Euclidean) ==
        Approx(std::log(10.0) / z));
  CHECK(vector_distance(target[0].vec, cands[1].vec, Distance::Euclidean) ==
        Approx(std::log(2.5) / z));
  const auto r = contrast_tests(target, cands, Distance::Euclidean, true);
  CHECK(r.ova == 0.0);
  CHECK(r.bc == 0.0);
  CHECK(r.avgr == 2.0);
}

TEST_CASE("contrast tests: SC does not bound BC") {
  // Nearest 1, second nearest 0, furthest 25: in squashed space 1 beats 0
  // but loses to 25, so SC passes while BC fails.
  auto fixed = [](double n) { return fixed_embedding(n, 8); };
  const std::vector<ContrastItem> target = {{10.0, fixed(10.0)}};
  const std::vector<ContrastItem> cands = {{0.0, fixed(0.0)}, {1.0, fixed(1.0)}, {25.0, fixed(25.0)}};
  const auto r = contrast_tests(target, cands, Distance::Euclidean, true);
  CHECK(r.sc == 100.0);
  CHECK(r.bc == 0.0);
}

TEST_CASE("contrast tests: constant embeddings and OVA bounds") {
  const std::vector<double> set = {1, 2, 4, 8, 16, 32};
  const auto r = ova_sc_bc(set, [](double) { return std::vector<double>{0.5, 0.5}; });
  CHECK(r.ova == 0.0);
  CHECK(r.sc == 0.0);
  CHECK(r.bc == 0.0);
  CHECK(r.avgr == Approx((set.size() - 1 + 1) / 2.0));

  Rng rng(8);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 3 + rng.below(10), dim = 1 + rng.below(4);
    std::vector<ContrastItem> items(n);
    for (auto& it : items) {
      it.value = static_cast<double>(rng.below(40));
      it.vec.resize(dim);
      for (auto& x : it.vec) x = rng.normal();
    }
    const auto c = contrast_tests(items, items, Distance::Euclidean, true);
    CHECK(c.ova <= c.sc);
    CHECK(c.ova <= c.bc);
  }
}

TEST_CASE("contrast tests: tied nearest neighbours") {
  const std::vector<ContrastItem> target = {{5.0, {5.0}}};
  const std::vector<ContrastItem> cands = {{4.0, {9.0}}, {6.0, {6.0}}, {100.0, {100.0}}};
  const auto r = contrast_tests(target, cands, Distance::Euclidean, true);
  CHECK(r.nearest_ties == 1);
  CHECK(r.ova == 100.0);
  CHECK(r.avgr == 1.0);
}

TEST_CASE("cosine distance") {
  CHECK(vector_distance(std::vector<double>{1, 0}, std::vector<double>{0, 2}, Distance::Cosine) ==
        Approx(1.0));
  CHECK(vector_distance(std::vector<double>{1, 1}, std::vector<double>{2, 2}, Distance::Cosine) ==
        Approx(0.0).scale(1.0));
  CHECK(vector_distance(std::vector<double>{0, 0}, std::vector<double>{2, 2}, Distance::Cosine) == 1.0);
}

TEST_CASE("numeration") {
  auto m = tiny_model(9, 1, {"one", "two", "ten", "seven"});
  m.mode = EmbeddingMode::Fixed;  // only words matter here; numeral uses f(n)
  m.dim = 2;
  m.word_in = Matrix<float>(2, 5);
  const std::vector<std::pair<std::string, double>> lex = {{"one", 1}, {"two", 2}, {"ten", 10}};
  for (const auto& [w, v] : lex) {
    auto col = m.word_in.col(*m.vocab.find(w));
    const auto f = fixed_embedding(v, 2);
    col[0] = static_cast<float>(f[0]);
    col[1] = static_cast<float>(f[1]);
  }
  std::vector<LexiconEntry> lexicon;
  for (const auto& [w, v] : lex) lexicon.push_back({w, v});
  lexicon.push_back({"zillion", 1e30});
  const auto r = numeration_eval(std::vector<double>{2.0}, lexicon, m);
  CHECK(r.dropped_words == 1);
  CHECK(r.report.ova == 100.0);

  for (std::size_t j = 0; j < m.word_in.cols; ++j) {
    m.word_in.col(j)[0] = 0.3f;
    m.word_in.col(j)[1] = 0.3f;
  }
  const auto flat = numeration_eval(std::vector<double>{2.0, 3.0}, lexicon, m);
  CHECK(flat.report.ova == 0.0);
  CHECK(flat.report.avgr == 2.0);

  std::istringstream in("one\t1\nten\t10\n");
  CHECK(read_lexicon(in).size() == 2);
  std::istringstream bad("one 1\n");
  CHECK_THROWS_AS(read_lexicon(bad), FormatError);
}

TEST_CASE("magnitude classes") {
  CHECK(magnitude_class_of(3) == 0);
  CHECK(magnitude_class_of(10) == 1);
  CHECK(magnitude_class_of(-999) == 2);
  CHECK(magnitude_class_of(0.001) == 0);
  CHECK(magnitude_class_of(5e12) == 7);
  CHECK(magnitude_class_predict(std::vector<double>(8, 1.5)) == 0);
  std::vector<double> s(8, 0.0);
  s[5] = 2.0;
  CHECK(magnitude_class_predict(s) == 5);

  const std::vector<std::size_t> truth = {0, 1, 2, 2, 7};
  CHECK(f1_scores(truth, truth, 8) == std::pair<double, double>{1.0, 1.0});
  const std::vector<std::size_t> pred = {0, 1, 2, 1, 7};
  const auto [micro, macro] = f1_scores(truth, pred, 8);
  CHECK(micro == Approx(0.8));
  CHECK(macro == Approx((1.0 + 2.0 / 3.0 + 2.0 / 3.0 + 1.0) / 4.0));

  std::istringstream in("150\t2\n7\t0\n");
  CHECK(read_magnitude_classes(in).size() == 2);
  std::istringstream bad("150\t9\n");
  CHECK_THROWS_AS(read_magnitude_classes(bad), FormatError);
}

TEST_CASE("magnitude-class evaluation with an aligned meta-embedding") {
  // Context word "big" aligns with class 3 numerals, "small" with class 0.
  EmbeddingModel m;
  m.mode = EmbeddingMode::Fixed;
  m.dim = 2;
  m.vocab.add({"big", 1, false});
  m.vocab.add({"small", 1, false});
  m.word_in = Matrix<float>(2, 3);
  m.word_out = Matrix<float>(2, 3);
  // fixed embedding: [f(n), 1] / 4; f(5000) ~ 9.5, f(5) ~ 2.6
  m.word_in.col(1)[0] = 1.0f;
  m.word_in.col(1)[1] = -3.0f;
  m.word_in.col(2)[0] = -1.0f;
  m.word_in.col(2)[1] = 3.0f;
  std::vector<std::pair<double, std::size_t>> labeled;
  for (double v : {2.0, 3.0, 5.0}) labeled.emplace_back(v, 0);
  for (double v : {2000.0, 5000.0}) labeled.emplace_back(v, 3);
  std::vector<EvalInstance> inst = {{{"big"}, 4000.0, "4000"}, {{"small"}, 4.0, "4"}};
  const auto r = evaluate_magnitude_classes(m, inst, labeled, ScoreKind::SB, false, 1);
  CHECK(r.instances == 2);
  CHECK(r.micro_f1 == 1.0);
  CHECK(r.avgr == 1.0);

  const auto metas = class_meta_embeddings(m, labeled, Side::Output, 1);
  CHECK(metas[5] == std::vector<double>{0.0, 0.0});
  CHECK(metas[0][1] == Approx(0.25));
}

TEST_CASE("spearman") {
  const std::vector<double> a = {1, 2, 3, 4};
  CHECK(spearman(a, a) == Approx(1.0));
  CHECK(spearman(a, std::vector<double>{4, 3, 2, 1}) == Approx(-1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) == Approx(0.5));
  CHECK_THROWS_AS(spearman(a, std::vector<double>{1, 2}), InputError);
  CHECK(spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}) == Approx(std::sqrt(3.0) / 2));
}

TEST_CASE("word similarity") {
  auto m = tiny_model(10, 3, {"cat", "dog", "car"});
  std::istringstream in("cat dog 9\ncat car 2\ndog car 1\ncat unicorn 5\n");
  const auto r = evaluate_word_similarity(m, in);
  CHECK(r.pairs == 3);
  CHECK(r.skipped == 1);
  CHECK(std::fabs(r.rho) <= 1.0);
  std::istringstream bad("cat dog\n");
  CHECK_THROWS_AS(evaluate_word_similarity(m, bad), FormatError);
}

TEST_CASE("report output") {
  Report r;
  r.title = "t";
  r.add("AVGR", 1.5);
  r.add("mode", std::string("fixed"));
  std::ostringstream kv, table;
  r.write_kv(kv);
  r.write_table(table);
  CHECK(kv.str() == "AVGR=1.5\nmode=fixed\n");
  CHECK(table.str() == "t\n  AVGR  1.5\n  mode  fixed\n");
}
