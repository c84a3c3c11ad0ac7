#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <set>

#include "doctest.h"
#include "robust_bvs/error.hpp"
#include "robust_bvs/model_space.hpp"

using namespace rbvs;
using boost::multiprecision::cpp_int;

namespace {

cpp_int factorial(int k) {
  cpp_int f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

TEST_CASE("enumeration visits every mask once") {
  std::set<std::uint64_t> seen;
  for (ModelId m : enumerate_models(5)) seen.insert(m.mask);
  CHECK(seen.size() == 32);
  CHECK(enumerate_models(5).size() == 32);
  CHECK(*seen.begin() == 0);
}

TEST_CASE("max_dim filters by dimension") {
  std::uint64_t count = 0;
  for (ModelId m : enumerate_models(6, 2)) {
    CHECK(model_dimension(m) <= 2);
    ++count;
  }
  CHECK(count == 1 + 6 + 15);
  CHECK(enumerate_models(6, 2).size() == count);
}

TEST_CASE("p = 0 has only the null model") {
  std::uint64_t count = 0;
  for (ModelId m : enumerate_models(0)) {
    CHECK(m.mask == 0);
    ++count;
  }
  CHECK(count == 1);
}

TEST_CASE("Scott-Berger odds match exact factorial ratios") {
  for (int p : {1, 4, 10, 30, 62}) {
    const cpp_int pf = factorial(p);
    for (int k = 0; k <= p; ++k) {
      const cpp_int num = factorial(k) * factorial(p - k);
      // log(num/pf) from exact integers, through long double
      const long double exact = std::log(static_cast<long double>(num.convert_to<long double>())) -
                                std::log(static_cast<long double>(pf.convert_to<long double>()));
      CHECK(scott_berger_log_prior_odds(k, p) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-12));
    }
  }
}

TEST_CASE("prior probabilities of all models sum to one") {
  for (int p : {1, 3, 8, 12}) {
    // sum_j P_j0 = p + 1, each dimension carrying equal total mass
    double total = 0.0;
    for (ModelId m : enumerate_models(p)) total += std::exp(scott_berger_log_prior_odds(m, p));
    CHECK(total == doctest::Approx(p + 1.0).epsilon(1e-12));
  }
}

TEST_CASE("null model has odds one") { CHECK(scott_berger_log_prior_odds(0, 7) == 0.0); }

TEST_CASE("check_model rejects bits beyond p") {
  CHECK_NOTHROW(check_model(ModelId{0b101}, 3));
  CHECK_THROWS_AS(check_model(ModelId{0b1000}, 3), ConfigError);
  CHECK_THROWS_AS(check_model(ModelId{0}, 63), ConfigError);
}

TEST_CASE("log_binomial") {
  CHECK(log_binomial(10, 3) == doctest::Approx(std::log(120.0)).epsilon(1e-14));
  CHECK(log_binomial(62, 31) == doctest::Approx(std::log(465428353255261088.0)).epsilon(1e-12));
}
