#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace numem {

enum class TokenKind : std::uint8_t { Word, Numeral, UnknownWord };

struct Token {
  TokenKind kind = TokenKind::Word;
  std::string surface;
  double value = 0.0;  // meaningful for Numeral only

  static Token word(std::string s) { return {TokenKind::Word, std::move(s), 0.0}; }
  static Token numeral(std::string s, double v) { return {TokenKind::Numeral, std::move(s), v}; }

  bool is_numeral() const { return kind == TokenKind::Numeral; }
  friend bool operator==(const Token&, const Token&) = default;
};

using Sentence = std::vector<Token>;

/// Magnitudes above this are rejected by the numeral grammar.
inline constexpr double kMaxNumeralMagnitude = 1e300;

/// Parses a numeral surface:
///   [+-]? (digits | d{1,3}(,ddd)+) ('.' digits)? ([eE] [+-]? digits)?
/// The whole string must match. Commas are dropped before conversion.
std::optional<double> parse_numeral(std::string_view surface);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_numeral(double value);

struct TokenizerOptions {
  bool lowercase = false;
};

/// Whitespace split, edge punctuation stripped, each token classified as
/// Word or Numeral.
Sentence tokenize(std::string_view line, const TokenizerOptions& options = {});

std::vector<Sentence> read_corpus(std::istream& in, const TokenizerOptions& options = {});

enum class EmbeddingMode : std::uint8_t { Prototype, NumAsTok, Fixed };

std::string_view to_string(EmbeddingMode mode);
EmbeddingMode parse_embedding_mode(std::string_view name);

struct VocabEntry {
  std::string surface;
  std::uint64_t count = 0;
  bool numeral = false;
};

/// Word (and, in NumAsTok mode, numeral) index. Index 0 is the unknown-word
/// symbol; in NumAsTok mode index 1 is the unknown-numeral symbol. NumAsTok
/// numerals are keyed by format_numeral(value), so "2,000" and "2000" share
/// an entry.
class Vocabulary {
 public:
  static constexpr std::string_view kUnkWord = "<unk>";
  static constexpr std::string_view kUnkNumeral = "<unk_num>";
  static constexpr std::uint32_t kUnkWordIndex = 0;
  static constexpr std::uint32_t kUnkNumeralIndex = 1;

  explicit Vocabulary(EmbeddingMode mode = EmbeddingMode::Prototype);

  EmbeddingMode mode() const { return mode_; }
  std::size_t size() const { return entries_.size(); }
  const VocabEntry& entry(std::uint32_t index) const { return entries_.at(index); }
  const std::vector<VocabEntry>& entries() const { return entries_; }

  bool has_numeral_entries() const { return mode_ == EmbeddingMode::NumAsTok; }
  std::size_t reserved_count() const { return has_numeral_entries() ? 2 : 1; }

  std::optional<std::uint32_t> find(std::string_view surface) const;

  /// Word lookup; never fails (falls back to the unknown-word index).
  std::uint32_t resolve_word(std::string_view surface) const;

  /// NumAsTok only: numeral lookup with unknown-numeral fallback.
  std::uint32_t resolve_numeral(double value) const;

  /// Word tokens resolve through resolve_word; numerals through
  /// resolve_numeral (NumAsTok) or not at all (other modes).
  std::optional<std::uint32_t> resolve(const Token& token) const;

  std::uint64_t total_tokens = 0;
  std::uint64_t numeral_tokens = 0;

  /// Appends an entry; used by the builder and the model reader.
  std::uint32_t add(VocabEntry entry);
  VocabEntry& mutable_entry(std::uint32_t index) { return entries_.at(index); }

  /// `surface<TAB>count` per line in index order.
  void write(std::ostream& out) const;

 private:
  EmbeddingMode mode_;
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct VocabOptions {
  EmbeddingMode mode = EmbeddingMode::Prototype;
  std::size_t max_vocab = 300000;  // excludes reserved symbols
  std::uint64_t min_count = 1;
  /// NumAsTok: cap on numeral entries, applied before max_vocab.
  std::size_t max_numerals = std::numeric_limits<std::size_t>::max();
};

/// Frequency-ranked vocabulary; ties broken by first occurrence. Throws
/// InputError("empty corpus") when there are no tokens.
Vocabulary build_vocabulary(std::span<const Sentence> corpus, const VocabOptions& options);

/// One value per Numeral token, corpus order, duplicates kept.
std::vector<double> collect_numbers(std::span<const Sentence> corpus);

}  // namespace numem
