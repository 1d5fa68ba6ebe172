#include "numem/numtransform.hpp"

#include <cmath>
#include <string>

#include "numem/errors.hpp"

namespace numem {

double squash(double x) {
  if (!std::isfinite(x)) throw InputError("non-finite numeral");
  if (x > 1.0) return std::log(x) + 1.0;
  if (x < -1.0) return -std::log(-x) - 1.0;
  return x;
}

double unsquash(double y) {
  if (y > 1.0) return std::exp(y - 1.0);
  if (y < -1.0) return -std::exp(-y - 1.0);
  return y;
}

std::string_view to_string(TransformStage stage) {
  return stage == TransformStage::Dataset ? "dataset" : "similarity";
}

TransformStage parse_transform_stage(std::string_view name) {
  if (name == "dataset") return TransformStage::Dataset;
  if (name == "similarity") return TransformStage::Similarity;
  throw InputError("unknown transform stage '" + std::string(name) + "'");
}

StagedDataset apply_stage(std::span<const double> xs, TransformStage stage) {
  if (xs.empty()) throw InputError("empty number dataset");
  if (stage == TransformStage::Similarity) {
    for (double x : xs) {
      if (!std::isfinite(x)) throw InputError("non-finite numeral");
    }
    return {std::vector<double>(xs.begin(), xs.end()), ScalarMap::squashing()};
  }
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(squash(x));
  return {std::move(out), ScalarMap::identity()};
}

}  // namespace numem
