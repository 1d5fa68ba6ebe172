#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "numem/errors.hpp"
#include "numem/numtransform.hpp"
#include "numem/rng.hpp"

using namespace numem;
using doctest::Approx;

TEST_CASE("squash examples") {
  CHECK(squash(1.0) == 1.0);
  CHECK(squash(0.0) == 0.0);
  CHECK(squash(std::numbers::e) == Approx(2.0).epsilon(1e-15));
  CHECK(squash(-std::numbers::e) == Approx(-2.0).epsilon(1e-15));
  CHECK(squash(-1.0) == -1.0);
  CHECK(squash(0.25) == 0.25);
  CHECK_THROWS_WITH_AS(squash(std::numeric_limits<double>::infinity()), "non-finite numeral",
                       InputError);
  CHECK_THROWS_AS(squash(std::nan("")), InputError);
}

TEST_CASE("unsquash examples") {
  CHECK(unsquash(2.0) == Approx(std::numbers::e).epsilon(1e-15));
  CHECK(unsquash(-1.0) == -1.0);
  CHECK(unsquash(1.0 + std::log(1e12)) == Approx(1e12).epsilon(1e-13));
}

TEST_CASE("squash properties on random values") {
  Rng rng(11);
  for (int i = 0; i < 20000; ++i) {
    const double a = rng.normal() * std::pow(10.0, rng.uniform(-3.0, 15.0));
    const double b = rng.normal() * std::pow(10.0, rng.uniform(-3.0, 15.0));
    if (a < b) CHECK(squash(a) < squash(b));
    CHECK(squash(-a) == -squash(a));
    CHECK(std::fabs(unsquash(squash(a)) - a) <= 1e-9 * std::max(1.0, std::fabs(a)));
  }
  CHECK(std::fabs(squash(1.0 + 1e-9) - squash(1.0)) < 1e-8);
  CHECK(std::fabs(squash(1.0 - 1e-9) - squash(1.0)) < 1e-8);
  CHECK(std::fabs(squash(-1.0 - 1e-9) - squash(-1.0)) < 1e-8);
}

TEST_CASE("apply_stage") {
  const std::vector<double> x = {1.0, std::numbers::e};
  auto d = apply_stage(x, TransformStage::Dataset);
  CHECK(d.values[0] == 1.0);
  CHECK(d.values[1] == Approx(2.0));
  CHECK_FALSE(d.g.squashes());
  CHECK(d.g(5.0) == 5.0);

  auto s = apply_stage(x, TransformStage::Similarity);
  CHECK(s.values == x);
  CHECK(s.g.squashes());
  CHECK(s.g(std::numbers::e) == Approx(2.0));

  const std::vector<double> neg = {-std::numbers::e};
  CHECK(apply_stage(neg, TransformStage::Dataset).values[0] == Approx(-2.0));

  CHECK_THROWS_AS(apply_stage(std::vector<double>{}, TransformStage::Dataset), InputError);
}

TEST_CASE("stage names") {
  CHECK(parse_transform_stage("similarity") == TransformStage::Similarity);
  CHECK(to_string(TransformStage::Dataset) == "dataset");
  CHECK_THROWS_AS(parse_transform_stage("both"), InputError);
  CHECK(to_induction_space(std::numbers::e, TransformStage::Dataset) == Approx(2.0));
  CHECK(to_induction_space(7.0, TransformStage::Similarity) == 7.0);
  CHECK(from_induction_space(2.0, TransformStage::Dataset) == Approx(std::numbers::e));
}
