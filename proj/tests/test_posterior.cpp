#include <cmath>
#include <limits>
#include <map>

#include "doctest.h"
#include "robust_bvs/error.hpp"
#include "robust_bvs/posterior.hpp"

using namespace rbvs;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<ModelEvidence> toy_evidence() {
  // p = 2; weights 1, 3, 2, 4 (log BF + log odds)
  return {{ModelId{0}, 0.0, 0.0},
          {ModelId{1}, std::log(6.0), -std::log(2.0)},
          {ModelId{2}, std::log(4.0), -std::log(2.0)},
          {ModelId{3}, std::log(4.0), 0.0}};
}
}  // namespace

TEST_CASE("probabilities are normalized weights, sorted") {
  const auto s = posterior_model_probs(toy_evidence(), 2);
  REQUIRE(s.model_probs.size() == 4);
  CHECK(s.model_probs[0].model.mask == 3);
  CHECK(s.model_probs[0].probability == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(s.model_probs[1].model.mask == 1);
  CHECK(s.model_probs[1].probability == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.model_probs[3].model.mask == 0);
  CHECK(s.normalizing_log_const == doctest::Approx(std::log(10.0)).epsilon(1e-15));
  CHECK(s.inclusion_probs[0] == doctest::Approx(0.7));
  CHECK(s.inclusion_probs[1] == doctest::Approx(0.6));
  CHECK(s.hpm.mask == 3);
  CHECK(s.mpm.mask == 3);
  CHECK(highest_posterior_model(toy_evidence()).mask == 3);
}

TEST_CASE("ties break by ascending mask") {
  std::vector<ModelEvidence> e = {{ModelId{0}, 0.0, 0.0}, {ModelId{2}, 0.0, 0.0}, {ModelId{1}, 0.0, 0.0}};
  const auto s = posterior_model_probs(e, 2);
  CHECK(s.model_probs[0].model.mask == 0);
  CHECK(s.model_probs[1].model.mask == 1);
  CHECK(s.model_probs[2].model.mask == 2);
  CHECK(highest_posterior_model(e).mask == 0);
}

TEST_CASE("huge log Bayes factors do not overflow") {
  std::vector<ModelEvidence> e = {{ModelId{0}, 0.0, 0.0}, {ModelId{1}, 5000.0, 0.0}, {ModelId{2}, 4999.0, 0.0}};
  const auto s = posterior_model_probs(e, 2);
  CHECK(s.model_probs[0].probability == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(std::isfinite(s.normalizing_log_const));
}

TEST_CASE("saturated models share the mass by prior odds") {
  std::vector<ModelEvidence> e = {{ModelId{0}, 0.0, 0.0}, {ModelId{1}, kInf, std::log(3.0)}, {ModelId{2}, kInf, 0.0}};
  const auto s = posterior_model_probs(e, 2);
  CHECK(s.model_probs[0].model.mask == 1);
  CHECK(s.model_probs[0].probability == doctest::Approx(0.75));
  CHECK(s.model_probs[2].probability == 0.0);
}

TEST_CASE("MPM uses a strict one-half threshold") {
  CHECK(median_probability_model({0.5, 0.5000001, 0.2}).mask == 0b010);
}

TEST_CASE("input validation") {
  std::vector<ModelEvidence> no_null = {{ModelId{1}, 0.0, 0.0}};
  CHECK_THROWS_AS(posterior_model_probs(no_null, 1), ConfigError);
  std::vector<ModelEvidence> dup = {{ModelId{0}, 0.0, 0.0}, {ModelId{1}, 1.0, 0.0}, {ModelId{1}, 1.0, 0.0}};
  CHECK_THROWS_AS(posterior_model_probs(dup, 1), ConfigError);
  std::vector<ModelEvidence> nan = {{ModelId{0}, 0.0, 0.0}, {ModelId{1}, std::nan(""), 0.0}};
  CHECK_THROWS_AS(posterior_model_probs(nan, 1), NumericError);
}

TEST_CASE("Rng is reproducible and roughly standard") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  Rng r(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
  std::map<std::uint64_t, int> counts;
  for (int i = 0; i < 60000; ++i) ++counts[r.below(6)];
  CHECK(counts.size() == 6);
  for (const auto& [k, c] : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("MC3 reproduces the target on a small space") {
  // p = 3 with known weights; the visited-set renormalization is exact once
  // everything is visited.
  auto scorer = [](ModelId m) -> std::optional<ModelEvidence> {
    return ModelEvidence{m, 0.3 * static_cast<double>(m.mask), 0.0};
  };
  Mc3Options opts;
  opts.iterations = 20000;
  opts.seed = 5;
  const auto r = mc3_search(scorer, 3, opts);
  CHECK(r.visited.size() == 8);
  CHECK(r.trace.size() == 20000);
  CHECK(r.trace.front() == 0);
  double total = 0.0;
  for (const auto& [mask, c] : r.tallies) total += static_cast<double>(c);
  double z = 0.0;
  for (int m = 0; m < 8; ++m) z += std::exp(0.3 * m);
  for (const auto& [mask, c] : r.tallies) CHECK(std::abs(c / total - std::exp(0.3 * mask) / z) < 0.03);
}

TEST_CASE("MC3 skips unscorable proposals and is seed-deterministic") {
  auto scorer = [](ModelId m) -> std::optional<ModelEvidence> {
    if (m.mask == 0b11) return std::nullopt;
    return ModelEvidence{m, 0.0, 0.0};
  };
  Mc3Options opts;
  opts.iterations = 500;
  opts.chains = 2;
  const auto a = mc3_search(scorer, 2, opts);
  const auto b = mc3_search(scorer, 2, opts);
  CHECK(a.skipped_proposals > 0);
  CHECK(a.tallies.count(3) == 0);
  CHECK(a.trace == b.trace);
  CHECK(a.tallies == b.tallies);
}

TEST_CASE("MC3 keeps the null model in the normalizing set") {
  auto scorer = [](ModelId m) -> std::optional<ModelEvidence> { return ModelEvidence{m, 50.0 * model_dimension(m), 0.0}; };
  Mc3Options opts;
  opts.iterations = 1;
  opts.start = ModelId{0b11};
  const auto r = mc3_search(scorer, 2, opts);
  REQUIRE(r.visited.size() == 2);
  CHECK(r.visited.front().model.mask == 0);
}
