#include "numem/model_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "numem/errors.hpp"

namespace numem {

namespace {

constexpr std::string_view kMagic = "NUMEM";
constexpr std::string_view kVersion = "v1";

void write_row(std::ostream& out, std::span<const float> row) {
  char buf[32];
  for (std::size_t d = 0; d < row.size(); ++d) {
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(row[d]));
    if (d) out << ' ';
    out << buf;
  }
  out << '\n';
}

void write_le_floats(std::ostream& out, std::span<const float> values) {
  for (float v : values) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                          static_cast<unsigned char>(bits >> 16),
                          static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  }
}

void read_le_floats(std::istream& in, std::span<float> values) {
  unsigned char b[4];
  for (float& v : values) {
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated binary matrix");
    const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
                               (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
    v = std::bit_cast<float>(bits);
  }
}

// Line reader that keeps a 1-based line count for error messages.
struct LineReader {
  std::istream& in;
  std::size_t line = 0;

  std::string next(const char* what) {
    std::string s;
    if (!std::getline(in, s)) throw FormatError(std::string("unexpected end of file: ") + what, line + 1);
    ++line;
    return s;
  }
};

void read_text_row(LineReader& lr, std::span<float> row) {
  const std::string s = lr.next("matrix row");
  const char* p = s.data();
  const char* end = p + s.size();
  for (std::size_t d = 0; d < row.size(); ++d) {
    while (p < end && *p == ' ') ++p;
    auto [q, ec] = std::from_chars(p, end, row[d]);
    if (ec != std::errc{}) throw FormatError("malformed matrix value", lr.line);
    p = q;
  }
  while (p < end && *p == ' ') ++p;
  if (p != end) throw FormatError("extra values in matrix row", lr.line);
}

}  // namespace

void save_model(std::ostream& out, const EmbeddingModel& model, ModelFormat format) {
  const std::size_t m = model.prototype_count();
  out << kMagic << ' ' << kVersion << ' ' << to_string(model.mode) << ' ' << model.dim << ' '
      << model.vocab.size() << ' ' << m;
  if (format == ModelFormat::Binary) out << " binary";
  out << '\n';
  char beta[40];
  std::snprintf(beta, sizeof beta, "%.17g", model.beta);
  out << "BETA " << beta << '\n';
  model.vocab.write(out);
  if (m > 0) write_prototypes(out, *model.prototypes);

  auto emit = [&](const Matrix<float>& mat) {
    if (format == ModelFormat::Binary) {
      write_le_floats(out, mat.data);
    } else {
      for (std::size_t j = 0; j < mat.cols; ++j) write_row(out, mat.col(j));
    }
  };
  emit(model.word_in);
  emit(model.word_out);
  if (m > 0) {
    emit(model.proto_in);
    emit(model.proto_out);
  }
}

void save_model(const std::string& path, const EmbeddingModel& model, ModelFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  save_model(out, model, format);
  if (!out) throw InputError("write failed: " + path);
}

EmbeddingModel load_model(std::istream& in) {
  LineReader lr{in};
  std::istringstream header(lr.next("header"));
  std::string magic, version, mode, tail;
  std::size_t dim = 0, vocab_size = 0, m = 0;
  if (!(header >> magic >> version >> mode >> dim >> vocab_size >> m) || magic != kMagic ||
      version != kVersion) {
    throw FormatError("not a NUMEM v1 model", lr.line);
  }
  header >> tail;
  const bool binary = tail == "binary";

  EmbeddingModel model;
  try {
    model.mode = parse_embedding_mode(mode);
  } catch (const InputError& e) {
    throw FormatError(e.what(), lr.line);
  }
  if (dim < 2) throw FormatError("dimension must be at least 2", lr.line);
  model.dim = dim;

  {
    std::istringstream beta_line(lr.next("BETA line"));
    std::string tag;
    if (!(beta_line >> tag >> model.beta) || tag != "BETA") {
      throw FormatError("malformed BETA line", lr.line);
    }
  }

  model.vocab = Vocabulary(model.mode);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    const std::string s = lr.next("vocabulary");
    const auto tab = s.find('\t');
    if (tab == std::string::npos) throw FormatError("vocabulary line needs a TAB", lr.line);
    VocabEntry e;
    e.surface = s.substr(0, tab);
    const std::string count = s.substr(tab + 1);
    auto [p, ec] = std::from_chars(count.data(), count.data() + count.size(), e.count);
    if (ec != std::errc{} || p != count.data() + count.size()) {
      throw FormatError("malformed vocabulary count", lr.line);
    }
    if (i < model.vocab.reserved_count()) {
      if (e.surface != model.vocab.entry(static_cast<std::uint32_t>(i)).surface) {
        throw FormatError("reserved vocabulary symbol out of place", lr.line);
      }
      model.vocab.mutable_entry(static_cast<std::uint32_t>(i)).count = e.count;
      continue;
    }
    e.numeral = model.vocab.has_numeral_entries() && parse_numeral(e.surface).has_value();
    model.vocab.add(std::move(e));
  }

  if (m > 0) {
    model.prototypes = read_prototypes(in, lr.line);
    lr.line += m + 1;
    if (model.prototypes->size() != m) throw FormatError("prototype count mismatch", lr.line);
  }

  auto fill = [&](Matrix<float>& mat, std::size_t cols) {
    mat = Matrix<float>(dim, cols);
    if (binary) {
      read_le_floats(in, mat.data);
    } else {
      for (std::size_t j = 0; j < cols; ++j) read_text_row(lr, mat.col(j));
    }
  };
  fill(model.word_in, vocab_size);
  fill(model.word_out, vocab_size);
  if (m > 0) {
    fill(model.proto_in, m);
    fill(model.proto_out, m);
  }
  return model;
}

EmbeddingModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  return load_model(in);
}

void export_word2vec(std::ostream& out, const EmbeddingModel& model,
                     std::span<const ExportNumeral> numerals) {
  out << model.vocab.size() + numerals.size() << ' ' << model.dim << '\n';
  for (std::uint32_t i = 0; i < model.vocab.size(); ++i) {
    out << model.vocab.entry(i).surface << ' ';
    write_row(out, model.word_in.col(i));
  }
  for (const auto& n : numerals) {
    const auto v = numeral_vector(model, n.value, Side::Input);
    out << n.surface << ' ';
    write_row(out, v);
  }
}

std::vector<std::pair<std::string, std::vector<float>>> read_word2vec(std::istream& in) {
  LineReader lr{in};
  std::istringstream header(lr.next("header"));
  std::size_t count = 0, dim = 0;
  if (!(header >> count >> dim)) throw FormatError("malformed word2vec header", lr.line);
  std::vector<std::pair<std::string, std::vector<float>>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string s = lr.next("word2vec row");
    const auto sp = s.find(' ');
    if (sp == std::string::npos) throw FormatError("malformed word2vec row", lr.line);
    std::vector<float> v(dim);
    std::istringstream row(s.substr(sp + 1));
    for (auto& x : v) {
      if (!(row >> x)) throw FormatError("malformed word2vec value", lr.line);
    }
    out.emplace_back(s.substr(0, sp), std::move(v));
  }
  return out;
}

}  // namespace numem
