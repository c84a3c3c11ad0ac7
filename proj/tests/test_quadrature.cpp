#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "robust_bvs/quadrature.hpp"

using namespace rbvs;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("finite interval") {
  const auto r = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("semi-infinite interval") {
  const auto r = integrate([](double x) { return std::exp(-x * x); }, 0.0, kInf);
  CHECK(r.value == doctest::Approx(0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("log-space integral far outside double range") {
  // Int_0^inf exp(-x) x^599 dx = 599!, about e^3234
  QuadratureOptions opts;
  opts.rel_tol = 1e-12;
  opts.breakpoints = {599.0};
  const auto r = integrate_log([](double x) { return -x + 599.0 * std::log(x); }, 0.0, kInf, opts);
  CHECK(r.log_scale);
  CHECK(r.value == doctest::Approx(std::lgamma(600.0)).epsilon(1e-12));
}

TEST_CASE("integrable endpoint singularity") {
  QuadratureOptions opts;
  opts.rel_tol = 1e-10;
  const auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, opts);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
}
