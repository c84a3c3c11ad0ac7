#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "robust_bvs/design_linalg.hpp"
#include "robust_bvs/error.hpp"
#include "robust_bvs/oracle.hpp"
#include "robust_bvs/posterior.hpp"
#include "robust_bvs/robust_bf.hpp"

using namespace rbvs;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// B_i0 by Boost's exp-sinh quadrature of the fixed-g kernel times p(g); an
// integrator independent of ours. Only for modest n where B stays in range.
double boost_bf(const MixingDensityParams& p, int k0, int ki, double q) {
  const double g_min = std::max(0.0, p.g_min());
  auto f = [&](double t) {
    const double g = g_min + t;
    return std::exp(0.5 * (p.n - k0 - ki) * std::log1p(g) - 0.5 * (p.n - k0) * std::log1p(g * q) +
                    log_mixing_density(g, p));
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}
}  // namespace

TEST_CASE("presets resolve to their (a, b, rho)") {
  const int n = 40, k0 = 1, ki = 3;
  auto p = resolve_rho(Hyperparameters{}, n, k0, ki);
  CHECK(p.a == 0.5);
  CHECK(p.b == 1.0);
  CHECK(p.rho == doctest::Approx(0.25));
  p = resolve_rho(Hyperparameters::preset(RhoRule::hyper_g), n, k0, ki);
  CHECK(p.rho == doctest::Approx(1.0 / 41.0));
  CHECK(p.g_min() == doctest::Approx(0.0).epsilon(1e-15));
  p = resolve_rho(Hyperparameters::preset(RhoRule::hyper_g_over_n), n, k0, ki);
  CHECK(p.b == 40.0);
  CHECK(p.rho == 0.5);
  p = resolve_rho(Hyperparameters::preset(RhoRule::cui_george), n, k0, ki);
  CHECK(p.a == 1.0);
  p = resolve_rho(Hyperparameters::preset(RhoRule::berger_original), n, k0, ki);
  CHECK(p.rho == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("rho below b/(b+n) is rejected with the constraint in the message") {
  Hyperparameters hp;
  hp.rule = RhoRule::constant;
  hp.rho_value = 0.001;
  try {
    resolve_rho(hp, 10, 1, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("b/(b+n)") != std::string::npos);
  }
}

TEST_CASE("rule names round trip") {
  for (RhoRule r : {RhoRule::recommended, RhoRule::constant, RhoRule::hyper_g, RhoRule::hyper_g_over_n,
                    RhoRule::cui_george, RhoRule::berger_original}) {
    const auto parsed = parse_rho_rule(to_string(r));
    REQUIRE(parsed);
    CHECK(*parsed == r);
  }
  CHECK(!parse_rho_rule("zellner"));
}

TEST_CASE("mixing density integrates to one") {
  const MixingDensityParams p{0.5, 1.0, 0.25, 30};
  boost::math::quadrature::exp_sinh<double> integrator;
  const double g_min = p.g_min();
  const double total = integrator.integrate([&](double t) { return std::exp(log_mixing_density(g_min + t, p)); },
                                            0.0, kInf);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(log_mixing_density(g_min - 1e-9, p) == -kInf);
}

TEST_CASE("recommended closed form against Boost quadrature") {
  for (int n : {5, 12, 40}) {
    for (int ki : {1, 3}) {
      for (double q : {0.05, 0.4, 0.9, 1.0}) {
        const int k0 = 1;
        if (n < k0 + ki + 1) continue;
        const auto params = resolve_rho(Hyperparameters{}, n, k0, ki);
        const auto bf = log_bf_recommended(n, k0, ki, q);
        INFO("n=" << n << " ki=" << ki << " q=" << q);
        CHECK(bf.route == BayesFactorRoute::hypergeometric);
        CHECK(bf.log_value == doctest::Approx(std::log(boost_bf(params, k0, ki, q))).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("general integral against Boost quadrature for other presets") {
  const int n = 25, k0 = 2, ki = 2;
  for (RhoRule rule : {RhoRule::hyper_g, RhoRule::hyper_g_over_n, RhoRule::cui_george, RhoRule::berger_original}) {
    const auto params = resolve_rho(Hyperparameters::preset(rule), n, k0, ki);
    for (double q : {0.2, 0.7}) {
      INFO(to_string(rule) << " q=" << q);
      CHECK(log_bf_general(params, k0, ki, q).log_value ==
            doctest::Approx(std::log(boost_bf(params, k0, ki, q))).epsilon(1e-8));
    }
  }
}

TEST_CASE("huge n stays finite") {
  const auto bf = log_bf_recommended(100000, 1, 5, 0.5);
  CHECK(std::isfinite(bf.log_value));
  CHECK(bf.log_value > 1000.0);
  const auto oracle = oracle::log_bf_quadrature(resolve_rho(Hyperparameters{}, 100000, 1, 5), 1, 5, 0.5);
  CHECK(bf.log_value == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("Q = 0 saturates for a = 1/2 and stays finite when integrable") {
  const auto sat = log_bf_recommended(10, 1, 2, 0.0);
  CHECK(sat.route == BayesFactorRoute::saturated);
  CHECK(sat.log_value == kInf);
  // a = 5: (n - k0)/2 = 1.5 < a + k/2, finite at Q = 0
  const auto fin = log_bf_general(MixingDensityParams{5.0, 1.0, 0.5, 4}, 1, 1, 0.0);
  CHECK(std::isfinite(fin.log_value));
}

TEST_CASE("sigma-known closed form against Boost quadrature") {
  const MixingDensityParams p{0.5, 1.0, 1.0 / 3.0, 30};
  const double sse0 = 40.0, ssei = 25.0, sigma = 1.3;
  const double s = (sse0 - ssei) / (2.0 * sigma * sigma);
  const int ki = 2;
  boost::math::quadrature::exp_sinh<double> integrator;
  const double g_min = p.g_min();
  const double ref = integrator.integrate(
      [&](double t) {
        const double g = g_min + t;
        return std::exp(-0.5 * ki * std::log1p(g) + s * g / (g + 1.0) + log_mixing_density(g, p));
      },
      0.0, kInf);
  const auto bf = log_bf_sigma_known(p, ki, sse0, ssei, sigma);
  CHECK(bf.route == BayesFactorRoute::incomplete_gamma);
  CHECK(bf.log_value == doctest::Approx(std::log(ref)).epsilon(1e-9));
}

TEST_CASE("Q -> 1 limit values") {
  const auto lim = limit_bf_q_to_one(MixingDensityParams{0.5, 1.0, 0.5, 4}, 1, 1);
  CHECK(lim.limit == doctest::Approx(0.5 * std::pow(0.5 * 4.0, -0.5)).epsilon(1e-15));
  CHECK(lim.ceiling == doctest::Approx(0.5));
  CHECK_THROWS_AS(limit_bf_q_to_one(MixingDensityParams{1.0, 1.0, 0.5, 4}, 1, 1), DomainError);
}

TEST_CASE("log_bf_for_fit: null, saturated and ordinary models") {
  Rng rng(11);
  Dataset d;
  d.y.resize(4);
  d.x0 = Eigen::MatrixXd::Ones(4, 1);
  d.x.resize(4, 3);
  for (int i = 0; i < 4; ++i) {
    d.y(i) = rng.normal();
    for (int j = 0; j < 3; ++j) d.x(i, j) = rng.normal();
  }
  d.validate();
  const DesignContext ctx(d);
  const Hyperparameters hp;
  CHECK(log_bf_for_fit(hp, ctx, ctx.fit(ModelId{0})).log_value == 0.0);
  // n = k0 + k: predictive matching makes B = 1
  const auto sat = log_bf_for_fit(hp, ctx, ctx.fit(ModelId{0b111}));
  CHECK(sat.log_value == 0.0);
  CHECK(sat.route == BayesFactorRoute::trivial);
  const ModelFit fit = ctx.fit(ModelId{0b001});
  CHECK(log_bf_for_fit(hp, ctx, fit).log_value == doctest::Approx(log_bf_recommended(4, 1, 1, fit.q).log_value));
}

TEST_CASE("robust prior density is normalized in one dimension") {
  PriorDensityPoint pt;
  pt.v_gram = Eigen::MatrixXd::Constant(1, 1, 2.0);
  pt.sigma = 1.0;
  const MixingDensityParams params{0.5, 1.0, 0.5, 10};
  boost::math::quadrature::exp_sinh<double> integrator;
  const double half = integrator.integrate(
      [&](double beta) {
        PriorDensityPoint p = pt;
        p.beta = Eigen::VectorXd::Constant(1, beta);
        return robust_prior_density(p, params);
      },
      0.0, kInf);
  CHECK(2.0 * half == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("intrinsic mixing cdf reaches one") {
  CHECK(intrinsic_mixing_cdf(1e12, 0.5, 0.0, 0.5) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(intrinsic_mixing_cdf(0.5, 0.5, 0.0, 0.5) == 0.0);
  CHECK(intrinsic_mixing_density(0.4, 0.5, 0.0, 0.5) == 0.0);
}
