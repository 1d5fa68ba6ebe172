#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "numem/composer.hpp"

namespace numem {

enum class ModelFormat { Text, Binary };

/// Layout (both formats):
///   NUMEM v1 <mode> <D> <|V|> <m>      (binary appends " binary")
///   BETA <beta>
///   |V| vocabulary lines `surface<TAB>count`
///   PROTO block when m > 0
///   E_I, E_O (|V| rows of D), then M_I, M_O (m rows of D)
/// Text rows are space-separated with 9 significant digits, which
/// round-trips float32 exactly. Binary rows are little-endian float32.
void save_model(std::ostream& out, const EmbeddingModel& model, ModelFormat format);
void save_model(const std::string& path, const EmbeddingModel& model, ModelFormat format);

/// Detects the format from the header. Throws FormatError with the line
/// number of the first malformed line.
EmbeddingModel load_model(std::istream& in);
EmbeddingModel load_model(const std::string& path);

/// A numeral to materialize on export: surface text and its value.
struct ExportNumeral {
  std::string surface;
  double value = 0.0;
};

/// word2vec text: `<count> <dim>` header, then `token v1 ... vD` per line
/// (input embeddings). Vocabulary entries first, then `numerals`.
void export_word2vec(std::ostream& out, const EmbeddingModel& model,
                     std::span<const ExportNumeral> numerals = {});

/// Reads word2vec text back as (token, vector) pairs.
std::vector<std::pair<std::string, std::vector<float>>> read_word2vec(std::istream& in);

}  // namespace numem
