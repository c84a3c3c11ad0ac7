#include <cmath>
#include <sstream>

#include "doctest.h"
#include "robust_bvs/design_linalg.hpp"
#include "robust_bvs/oracle.hpp"
#include "robust_bvs/posterior.hpp"
#include "robust_bvs/robust_bf.hpp"

using namespace rbvs;

TEST_CASE("fixed-g kernel at g = 0 is one") {
  CHECK(oracle::log_bf_given_g(0.0, 10, 1, 2, 0.3) == 0.0);
}

TEST_CASE("quadrature oracle reproduces the Q = 1 ceiling behaviour") {
  const auto params = resolve_rho(Hyperparameters{}, 50, 1, 2);
  const double v = oracle::log_bf_quadrature(params, 1, 2, 1.0);
  CHECK(v < std::log(2.0 * 0.5 / (2.0 * 0.5 + 2.0)));
}

TEST_CASE("GLS marginal ratio equals the fixed-g kernel") {
  Rng rng(3);
  const int n = 12;
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Ones(n, 1);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    y(i) = 0.2 + x(i, 0) + rng.normal();
  }
  Dataset d;
  d.y = y;
  d.x0 = x0;
  d.x = x;
  d.validate();
  const DesignContext ctx(d);
  const Eigen::MatrixXd v = ctx.residual_design(ModelId{0b11});
  const Eigen::MatrixXd shape = (v.transpose() * v).inverse();
  const double q = ctx.fit(ModelId{0b11}).q;
  for (double g : {0.5, 7.0, 300.0, 1e6}) {
    const double ratio = oracle::log_marginal_given_g(y, x0, v, shape, g) - oracle::log_null_marginal(y, x0);
    CHECK(ratio == doctest::Approx(oracle::log_bf_given_g(g, n, 1, 2, q)).epsilon(1e-10));
  }
  // and the mixture marginal ratio equals the closed form
  const auto params = resolve_rho(Hyperparameters{}, n, 1, 2);
  const double mix = oracle::log_marginal_mixture(y, x0, v, shape, params) - oracle::log_null_marginal(y, x0);
  CHECK(mix == doctest::Approx(log_bf_recommended(n, 1, 2, q).log_value).epsilon(1e-8));
}

TEST_CASE("direct integration oracle on a tiny dataset") {
  Dataset d;
  d.y.resize(4);
  d.y << 0.3, -1.2, 0.8, 2.1;
  d.x0 = Eigen::MatrixXd::Ones(4, 1);
  d.x.resize(4, 1);
  d.x << 1.0, -0.5, 0.2, 1.7;
  d.validate();
  const DesignContext ctx(d);
  const double q = ctx.fit(ModelId{1}).q;
  const double g = 2.0;
  const double ratio = oracle::log_marginal_direct(d, ModelId{1}, g) - oracle::log_marginal_direct(d, ModelId{0}, g);
  CHECK(ratio == doctest::Approx(oracle::log_bf_given_g(g, 4, 1, 1, q)).epsilon(1e-6));
}

TEST_CASE("consistency simulator is deterministic and threads do not matter") {
  oracle::ConsistencyConfig c;
  c.n_grid = {30};
  c.replicates = 4;
  const auto a = oracle::consistency_simulator(c);
  c.threads = 3;
  const auto b = oracle::consistency_simulator(c);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].posterior_prob == b[i].posterior_prob);
    CHECK(a[i].replicate == static_cast<int>(i));
  }
  std::ostringstream out;
  oracle::write_consistency_tsv(out, a);
  CHECK(out.str().rfind("n\treplicate\tmodel_mask\tposterior_prob\n", 0) == 0);
}
