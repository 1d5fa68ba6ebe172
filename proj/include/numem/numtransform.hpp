#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace numem {

/// Log-space squashing: log(x)+1 above 1, identity on [-1, 1], and
/// -log(-x)-1 below -1. Natural log. Odd, continuous, strictly increasing.
/// Throws InputError("non-finite numeral") for NaN or infinite input.
double squash(double x);

/// Inverse of squash.
double unsquash(double y);

/// Where squashing happens. Dataset: values are squashed before prototype
/// induction and similarity compares them directly. Similarity: induction
/// runs on raw values and squashing happens inside the similarity function.
enum class TransformStage { Dataset, Similarity };

std::string_view to_string(TransformStage stage);
TransformStage parse_transform_stage(std::string_view name);

/// A scalar map that is either the identity or squash.
class ScalarMap {
 public:
  static ScalarMap identity() { return ScalarMap(false); }
  static ScalarMap squashing() { return ScalarMap(true); }

  double operator()(double x) const { return squashes_ ? squash(x) : x; }
  bool squashes() const { return squashes_; }

 private:
  explicit ScalarMap(bool squashes) : squashes_(squashes) {}
  bool squashes_;
};

struct StagedDataset {
  std::vector<double> values;
  ScalarMap g;
};

/// Dataset stage -> (squash(X), identity); Similarity stage -> (X, squash).
/// Throws InputError on empty input.
StagedDataset apply_stage(std::span<const double> xs, TransformStage stage);

/// Maps a raw numeral into the space its prototypes were induced in.
inline double to_induction_space(double raw, TransformStage stage) {
  return stage == TransformStage::Dataset ? squash(raw) : raw;
}

/// Maps an induction-space value back to original units.
inline double from_induction_space(double v, TransformStage stage) {
  return stage == TransformStage::Dataset ? unsquash(v) : v;
}

}  // namespace numem
