#include <doctest.h>

#include <sstream>

#include "numem/errors.hpp"
#include "numem/model_io.hpp"
#include "numem/sgns.hpp"

using namespace numem;

namespace {

std::vector<Sentence> corpus() {
  std::vector<Sentence> c;
  for (int i = 0; i < 40; ++i) {
    c.push_back(tokenize("the cost was " + std::to_string(i * 13 + 1) + " dollars in " +
                         std::to_string(1990 + i % 7)));
  }
  return c;
}

EmbeddingModel trained(EmbeddingMode mode, bool som = false) {
  TrainConfig cfg;
  cfg.dim = 6;
  cfg.min_count = 1;
  cfg.mode = mode;
  cfg.epochs = 2;
  cfg.lr = 0.05;
  std::optional<PrototypeModel> p;
  if (mode == EmbeddingMode::Prototype) {
    PrototypeModel pm;
    pm.method = PrototypeMethod::Gmm;
    pm.gmm.components = {{0.25, 1.0, 0.5}, {0.75, 6.0, 1.5}};
    pm.values = pm.gmm.means();
    if (som) {
      pm.method = PrototypeMethod::Som;
      pm.gmm = {};
    }
    p = pm;
  }
  return train(corpus(), cfg, p);
}

void check_equal(const EmbeddingModel& a, const EmbeddingModel& b) {
  CHECK(a.mode == b.mode);
  CHECK(a.dim == b.dim);
  CHECK(a.beta == b.beta);
  CHECK(a.vocab.size() == b.vocab.size());
  for (std::uint32_t i = 0; i < a.vocab.size(); ++i) {
    CHECK(a.vocab.entry(i).surface == b.vocab.entry(i).surface);
    CHECK(a.vocab.entry(i).count == b.vocab.entry(i).count);
    CHECK(a.vocab.entry(i).numeral == b.vocab.entry(i).numeral);
  }
  CHECK(a.word_in == b.word_in);
  CHECK(a.word_out == b.word_out);
  CHECK(a.proto_in == b.proto_in);
  CHECK(a.proto_out == b.proto_out);
  CHECK(a.prototype_count() == b.prototype_count());
  if (a.prototypes) {
    CHECK(a.prototypes->values == b.prototypes->values);
    CHECK(a.prototypes->method == b.prototypes->method);
  }
}

}  // namespace

TEST_CASE("save/load round trip is exact in both formats") {
  for (auto mode : {EmbeddingMode::Prototype, EmbeddingMode::NumAsTok, EmbeddingMode::Fixed}) {
    const auto m = trained(mode);
    for (auto fmt : {ModelFormat::Text, ModelFormat::Binary}) {
      std::stringstream ss;
      save_model(ss, m, fmt);
      const auto back = load_model(ss);
      check_equal(m, back);
      std::stringstream again;
      save_model(again, back, fmt);
      std::stringstream first;
      save_model(first, m, fmt);
      CHECK(first.str() == again.str());
    }
  }
}

TEST_CASE("text header and fixed mode layout") {
  const auto m = trained(EmbeddingMode::Fixed);
  std::stringstream ss;
  save_model(ss, m, ModelFormat::Text);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "NUMEM v1 fixed 6 " + std::to_string(m.vocab.size()) + " 0");
  const std::string body = ss.str();
  CHECK(body.find("PROTO") == std::string::npos);
  std::size_t lines = 0;
  for (char c : body) lines += c == '\n';
  CHECK(lines == 2 + m.vocab.size() * 3);
}

TEST_CASE("load errors cite line numbers") {
  const auto m = trained(EmbeddingMode::Prototype);
  std::stringstream ss;
  save_model(ss, m, ModelFormat::Text);
  std::vector<std::string> lines;
  for (std::string l; std::getline(ss, l);) lines.push_back(l);

  auto load_with = [&](std::size_t index, const std::string& replacement) -> std::size_t {
    auto copy = lines;
    copy[index] = replacement;
    std::string text;
    for (auto& l : copy) text += l + "\n";
    std::istringstream in(text);
    try {
      load_model(in);
    } catch (const FormatError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(load_with(0, "NUMEM v2 prototype 6 3 2") == 1);
  CHECK(load_with(1, "BETA") == 2);
  CHECK(load_with(3, "no-tab-here") == 4);
  const std::size_t proto_row = 2 + m.vocab.size() + 1;
  CHECK(load_with(proto_row, "1 2") == proto_row + 1);
  CHECK(load_with(lines.size() - 1, "1 2 3") == lines.size());

  std::istringstream truncated(lines[0] + "\n" + lines[1] + "\n");
  CHECK_THROWS_AS(load_model(truncated), FormatError);
}

TEST_CASE("word2vec export") {
  const auto m = trained(EmbeddingMode::Prototype, true);
  const double p0 = from_induction_space(m.prototypes->values[0], m.prototypes->stage);
  const std::vector<ExportNumeral> nums = {{"p0", p0}, {"42", 42.0}};
  std::stringstream ss;
  export_word2vec(ss, m, nums);
  const auto rows = read_word2vec(ss);
  REQUIRE(rows.size() == m.vocab.size() + 2);
  for (std::uint32_t i = 0; i < m.vocab.size(); ++i) {
    CHECK(rows[i].first == m.vocab.entry(i).surface);
    const auto col = m.word_in.col(i);
    CHECK(std::equal(col.begin(), col.end(), rows[i].second.begin()));
  }
  const auto& proto_row = rows[m.vocab.size()].second;
  const auto c0 = m.proto_in.col(0);
  CHECK(std::equal(c0.begin(), c0.end(), proto_row.begin()));
  CHECK(rows.back().second == numeral_vector(m, 42.0, Side::Input));
}
