#include "numem/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "numem/errors.hpp"

namespace numem {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Returns the end of a run of digits starting at `i`.
std::size_t scan_digits(std::string_view s, std::size_t i) {
  while (i < s.size() && is_digit(s[i])) ++i;
  return i;
}

// Validates the grammar and returns the comma-free text, or nullopt.
std::optional<std::string> normalize_numeral(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;

  const std::size_t int_start = i;
  const std::size_t int_end = scan_digits(s, i);
  if (int_end == int_start) return std::nullopt;
  i = int_end;

  std::string out(s.substr(0, int_end));
  if (i < s.size() && s[i] == ',') {
    // Grouped form: 1-3 leading digits, then one or more ",ddd" groups.
    if (int_end - int_start > 3) return std::nullopt;
    while (i < s.size() && s[i] == ',') {
      const std::size_t g = i + 1;
      const std::size_t ge = scan_digits(s, g);
      if (ge - g != 3) return std::nullopt;
      out.append(s.substr(g, 3));
      i = ge;
    }
  }

  if (i < s.size() && s[i] == '.') {
    const std::size_t f = i + 1;
    const std::size_t fe = scan_digits(s, f);
    if (fe == f) return std::nullopt;
    out.append(s.substr(i, fe - i));
    i = fe;
  }

  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t e = i + 1;
    if (e < s.size() && (s[e] == '+' || s[e] == '-')) ++e;
    const std::size_t ee = scan_digits(s, e);
    if (ee == e) return std::nullopt;
    out.append(s.substr(i, ee - i));
    i = ee;
  }

  if (i != s.size()) return std::nullopt;
  return out;
}

bool is_edge_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::string_view strip_edges(std::string_view tok) {
  std::size_t b = 0;
  while (b < tok.size() && is_edge_punct(tok[b])) {
    // keep a sign that introduces a number
    if ((tok[b] == '+' || tok[b] == '-') && b + 1 < tok.size() && is_digit(tok[b + 1])) break;
    ++b;
  }
  std::size_t e = tok.size();
  while (e > b && is_edge_punct(tok[e - 1])) --e;
  return tok.substr(b, e - b);
}

}  // namespace

std::optional<double> parse_numeral(std::string_view surface) {
  auto text = normalize_numeral(surface);
  if (!text) return std::nullopt;
  const char* first = text->data();
  const char* last = first + text->size();
  if (*first == '+') ++first;  // from_chars does not accept a leading '+'
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  if (!std::isfinite(value) || std::fabs(value) > kMaxNumeralMagnitude) return std::nullopt;
  return value;
}

std::string format_numeral(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

Sentence tokenize(std::string_view line, const TokenizerOptions& options) {
  Sentence out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j == i) break;
    std::string_view raw = line.substr(i, j - i);
    i = j;

    std::string_view core = strip_edges(raw);
    if (core.empty()) core = raw;  // all punctuation: keep as a word
    if (auto v = parse_numeral(core)) {
      out.push_back(Token::numeral(std::string(core), *v));
      continue;
    }
    std::string w(core);
    if (options.lowercase) {
      std::transform(w.begin(), w.end(), w.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    out.push_back(Token::word(std::move(w)));
  }
  return out;
}

std::vector<Sentence> read_corpus(std::istream& in, const TokenizerOptions& options) {
  std::vector<Sentence> corpus;
  std::string line;
  while (std::getline(in, line)) {
    Sentence s = tokenize(line, options);
    if (!s.empty()) corpus.push_back(std::move(s));
  }
  return corpus;
}

std::string_view to_string(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::Prototype: return "prototype";
    case EmbeddingMode::NumAsTok: return "numastok";
    case EmbeddingMode::Fixed: return "fixed";
  }
  return "?";
}

EmbeddingMode parse_embedding_mode(std::string_view name) {
  if (name == "prototype") return EmbeddingMode::Prototype;
  if (name == "numastok") return EmbeddingMode::NumAsTok;
  if (name == "fixed") return EmbeddingMode::Fixed;
  throw InputError("unknown embedding mode '" + std::string(name) + "'");
}

Vocabulary::Vocabulary(EmbeddingMode mode) : mode_(mode) {
  add({std::string(kUnkWord), 0, false});
  if (has_numeral_entries()) add({std::string(kUnkNumeral), 0, true});
}

std::uint32_t Vocabulary::add(VocabEntry entry) {
  const auto index = static_cast<std::uint32_t>(entries_.size());
  index_.emplace(entry.surface, index);
  entries_.push_back(std::move(entry));
  return index;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Vocabulary::resolve_word(std::string_view surface) const {
  auto idx = find(surface);
  if (!idx || entries_[*idx].numeral) return kUnkWordIndex;
  return *idx;
}

std::uint32_t Vocabulary::resolve_numeral(double value) const {
  if (!has_numeral_entries()) {
    throw InputError("numerals are not vocabulary entries in " + std::string(to_string(mode_)) +
                     " mode");
  }
  auto idx = find(format_numeral(value));
  return idx ? *idx : kUnkNumeralIndex;
}

std::optional<std::uint32_t> Vocabulary::resolve(const Token& token) const {
  if (token.is_numeral()) {
    if (!has_numeral_entries()) return std::nullopt;
    return resolve_numeral(token.value);
  }
  if (token.kind == TokenKind::UnknownWord) return kUnkWordIndex;
  return resolve_word(token.surface);
}

void Vocabulary::write(std::ostream& out) const {
  for (const auto& e : entries_) out << e.surface << '\t' << e.count << '\n';
}

Vocabulary build_vocabulary(std::span<const Sentence> corpus, const VocabOptions& options) {
  struct Count {
    std::uint64_t count = 0;
    std::uint64_t first = 0;
  };
  std::unordered_map<std::string, Count> words;
  std::unordered_map<std::string, Count> numerals;
  const bool numerals_as_tokens = options.mode == EmbeddingMode::NumAsTok;

  Vocabulary vocab(options.mode);
  std::uint64_t position = 0;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      ++vocab.total_tokens;
      if (tok.is_numeral()) {
        ++vocab.numeral_tokens;
        if (!numerals_as_tokens) {
          ++position;
          continue;
        }
        auto [it, fresh] = numerals.try_emplace(format_numeral(tok.value), Count{0, position});
        ++it->second.count;
      } else {
        auto [it, fresh] = words.try_emplace(tok.surface, Count{0, position});
        ++it->second.count;
      }
      ++position;
    }
  }
  if (vocab.total_tokens == 0) throw InputError("empty corpus");

  struct Candidate {
    const std::string* surface;
    Count c;
    bool numeral;
  };
  auto ranked = [&](const std::unordered_map<std::string, Count>& table, bool numeral) {
    std::vector<Candidate> out;
    for (const auto& [s, c] : table) {
      if (c.count >= options.min_count) out.push_back({&s, c, numeral});
    }
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
      if (a.c.count != b.c.count) return a.c.count > b.c.count;
      return a.c.first < b.c.first;
    });
    return out;
  };

  std::vector<Candidate> all = ranked(words, false);
  if (numerals_as_tokens) {
    std::vector<Candidate> nums = ranked(numerals, true);
    if (nums.size() > options.max_numerals) nums.resize(options.max_numerals);
    std::vector<Candidate> merged;
    merged.reserve(all.size() + nums.size());
    std::merge(all.begin(), all.end(), nums.begin(), nums.end(), std::back_inserter(merged),
               [](const Candidate& a, const Candidate& b) {
                 if (a.c.count != b.c.count) return a.c.count > b.c.count;
                 return a.c.first < b.c.first;
               });
    all = std::move(merged);
  }
  if (all.size() > options.max_vocab) all.resize(options.max_vocab);

  std::uint64_t kept_words = 0;
  std::uint64_t kept_numerals = 0;
  for (const auto& cand : all) {
    vocab.add({*cand.surface, cand.c.count, cand.numeral});
    (cand.numeral ? kept_numerals : kept_words) += cand.c.count;
  }
  const std::uint64_t word_tokens = vocab.total_tokens - vocab.numeral_tokens;
  vocab.mutable_entry(Vocabulary::kUnkWordIndex).count = word_tokens - kept_words;
  if (numerals_as_tokens) {
    vocab.mutable_entry(Vocabulary::kUnkNumeralIndex).count = vocab.numeral_tokens - kept_numerals;
  }
  return vocab;
}

std::vector<double> collect_numbers(std::span<const Sentence> corpus) {
  std::vector<double> xs;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      if (tok.is_numeral()) xs.push_back(tok.value);
    }
  }
  return xs;
}

}  // namespace numem
