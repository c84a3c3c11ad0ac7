#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "robust_bvs/design_linalg.hpp"
#include "robust_bvs/error.hpp"
#include "robust_bvs/posterior.hpp"

using namespace rbvs;

namespace {

Dataset random_dataset(std::uint64_t seed, int n, int p) {
  Rng rng(seed);
  Dataset d;
  d.y.resize(n);
  d.x0 = Eigen::MatrixXd::Ones(n, 1);
  d.x.resize(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.normal();
    d.y(i) = 1.0 + 0.5 * d.x(i, 0) + rng.normal();
  }
  d.validate();
  return d;
}

// SSE by normal equations on the stacked design, independent of DesignContext.
double reference_sse(const Dataset& d, ModelId m) {
  Eigen::MatrixXd full(d.n(), d.k0() + model_dimension(m));
  full.leftCols(d.k0()) = d.x0;
  int c = d.k0();
  for (int j = 0; j < d.p(); ++j)
    if (m.contains(j)) full.col(c++) = d.x.col(j);
  const Eigen::VectorXd coef = (full.transpose() * full).ldlt().solve(full.transpose() * d.y);
  return (d.y - full * coef).squaredNorm();
}

}  // namespace

TEST_CASE("SSE matches normal equations for every model") {
  const Dataset d = random_dataset(3, 30, 4);
  const DesignContext ctx(d);
  for (ModelId m : enumerate_models(4)) {
    const ModelFit fit = ctx.fit(m);
    CHECK(fit.sse == doctest::Approx(reference_sse(d, m)).epsilon(1e-12));
    CHECK(fit.k == model_dimension(m));
    CHECK(fit.q == doctest::Approx(fit.sse / ctx.null_sse()).epsilon(1e-14));
    CHECK(fit.q <= 1.0);
  }
}

TEST_CASE("residual design is orthogonal to X0") {
  const Dataset d = random_dataset(4, 20, 3);
  const DesignContext ctx(d);
  const Eigen::MatrixXd v = ctx.residual_design(ModelId{0b101});
  CHECK(v.cols() == 2);
  CHECK((d.x0.transpose() * v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("y scaling multiplies SSE by c^2 and leaves Q alone") {
  Dataset d = random_dataset(5, 25, 3);
  const DesignContext base(d);
  d.y *= 37.0;
  const DesignContext scaled(d);
  for (ModelId m : enumerate_models(3)) {
    CHECK(scaled.fit(m).sse == doctest::Approx(37.0 * 37.0 * base.fit(m).sse).epsilon(1e-12));
    CHECK(scaled.fit(m).q == doctest::Approx(base.fit(m).q).epsilon(1e-12));
  }
}

TEST_CASE("column scaling leaves SSE and Q alone") {
  Dataset d = random_dataset(6, 25, 3);
  const DesignContext base(d);
  d.x.col(1) *= 1e-4;
  d.x0 *= -3.0;
  const DesignContext scaled(d);
  for (ModelId m : enumerate_models(3)) {
    CHECK(scaled.fit(m).sse == doctest::Approx(base.fit(m).sse).epsilon(1e-10));
    CHECK(scaled.fit(m).q == doctest::Approx(base.fit(m).q).epsilon(1e-10));
  }
}

TEST_CASE("collinear columns raise SingularDesignError naming them") {
  Dataset d = random_dataset(7, 20, 3);
  d.x.col(2) = 2.0 * d.x.col(0) - d.x.col(1);
  d.candidate_names = {"a", "b", "c"};
  const DesignContext ctx(d);
  CHECK_NOTHROW(ctx.fit(ModelId{0b011}));
  try {
    ctx.fit(ModelId{0b111});
    FAIL("expected SingularDesignError");
  } catch (const SingularDesignError& e) {
    CHECK(!e.columns().empty());
  }
}

TEST_CASE("too few rows is a DataError") {
  const Dataset d = random_dataset(8, 3, 3);
  const DesignContext ctx(d);
  CHECK_THROWS_AS(ctx.fit(ModelId{0b111}), DataError);
}

TEST_CASE("saturated fit gives SSE exactly zero") {
  const Dataset d = random_dataset(9, 4, 3);
  const DesignContext ctx(d);
  CHECK(ctx.fit(ModelId{0b111}).sse == 0.0);
  CHECK(ctx.fit(ModelId{0b111}).q == 0.0);
}

TEST_CASE("q_ratio") {
  CHECK(q_ratio(1.0, 4.0) == 0.25);
  CHECK_THROWS_AS(q_ratio(1.0, 0.0), DataError);
}

TEST_CASE("Dataset::validate fills names and rejects NaN") {
  Dataset d = random_dataset(10, 6, 2);
  d.candidate_names.clear();
  d.validate();
  CHECK(d.candidate_names.size() == 2);
  d.y(0) = std::nan("");
  CHECK_THROWS_AS(d.validate(), DataError);
}
