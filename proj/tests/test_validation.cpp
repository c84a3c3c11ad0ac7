#include <cmath>

#include "doctest.h"
#include "robust_bvs/error.hpp"
#include "robust_bvs/special_functions.hpp"
#include "robust_bvs/validation.hpp"

using namespace rbvs;

namespace {

// The recommended-prior closed form written out here with a shift on the
// 2F1 lower parameter; shift 0 is the correct expression.
ClosedFormBf closed_form_with_gamma_shift(double shift) {
  return [shift](int n, int k0, int ki, double q) {
    if (ki == 0) return 0.0;
    const double z = (1.0 - 1.0 / q) * (ki + k0) / (n + 1.0);
    HypergeometricResult f;
    try {
      f = log_gauss_2f1(0.5 * (ki + 1), 0.5 * (n - k0), 0.5 * (ki + 3) + shift, z);
    } catch (const NumericError&) {
      // series too long near Q = 0; the library switches to quadrature there
      return default_closed_form(n, k0, ki, q);
    }
    return -0.5 * ki * std::log((n + 1.0) / (ki + k0)) - 0.5 * (n - k0) * std::log(q) - std::log(ki + 1.0) +
           f.value.log_abs;
  };
}

}  // namespace

TEST_CASE("hand-written closed form passes route agreement") {
  const auto r = check_route_agreement(closed_form_with_gamma_shift(0.0));
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("tampered 2F1 fails route agreement") {
  const auto r = check_route_agreement(closed_form_with_gamma_shift(1.0));
  CHECK_FALSE(r.passed);
  CHECK(r.observed > r.tolerance);
  const auto c = check_closed_form_vs_oracle(closed_form_with_gamma_shift(1.0));
  CHECK_FALSE(c.passed);
}

TEST_CASE("a throwing closed form is reported as a failure") {
  const auto r = check_monotone_in_q([](int, int, int, double) -> double { throw std::runtime_error("boom"); });
  CHECK_FALSE(r.passed);
  CHECK(r.detail.find("boom") != std::string::npos);
}

TEST_CASE("report text has one line per property") {
  ValidationReport rep;
  rep.results.push_back({"x", "d", true, 1e-12, 1e-8, "", 0.0});
  rep.results.push_back({"y", "d", false, 3.0, 1.0, "", 0.0});
  CHECK_FALSE(rep.all_passed());
  const std::string t = rep.text();
  CHECK(t.find("PASS x") != std::string::npos);
  CHECK(t.find("FAIL y") != std::string::npos);
}
