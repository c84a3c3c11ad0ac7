#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "robust_bvs/model_space.hpp"

namespace rbvs {

/// One model's evidence: log B_i0 (may be +inf) and log prior odds log P_i0.
struct ModelEvidence {
  ModelId model;
  double log_bf = 0.0;
  double log_prior_odds = 0.0;
};

struct ModelProbability {
  ModelId model;
  double probability = 0.0;
};

struct PosteriorSummary {
  /// Sorted by probability descending, mask ascending.
  std::vector<ModelProbability> model_probs;
  std::vector<double> inclusion_probs;
  ModelId hpm;
  ModelId mpm;
  /// log of sum_j B_j0 P_j0 over the evaluated set.
  double normalizing_log_const = 0.0;
};

/// Pr(M_i | y) = B_i0 P_i0 / sum_j B_j0 P_j0 by a max-shifted log-sum-exp.
/// The null model (mask 0, log BF 0, log odds 0) must be present; otherwise
/// ConfigError. Models with log BF = +inf share all the mass in proportion to
/// their prior odds. `p` sizes the inclusion vector.
PosteriorSummary posterior_model_probs(const std::vector<ModelEvidence>& evidence, int p);

/// Marginal inclusion probability of each of the p candidates.
std::vector<double> inclusion_probabilities(const std::vector<ModelProbability>& probs, int p);

/// Covariates with inclusion probability strictly above 1/2.
ModelId median_probability_model(const std::vector<double>& inclusion);

/// Highest posterior model: argmax of log BF + log prior odds, smallest mask on
/// ties.
ModelId highest_posterior_model(const std::vector<ModelEvidence>& evidence);

/// Log-weight of a model (log BF + log prior odds), or nullopt if the model
/// cannot be fitted (e.g. rank-deficient design). Must be deterministic.
using ModelScorer = std::function<std::optional<ModelEvidence>(ModelId)>;

struct Mc3Options {
  std::int64_t iterations = 10000;
  int chains = 1;
  std::uint64_t seed = 1;
  ModelId start = ModelId::null_model();
};

struct Mc3Result {
  /// Visit counts per mask, summed over chains.
  std::map<std::uint64_t, std::int64_t> tallies;
  /// Exact evidence of every distinct visited model, ascending mask.
  std::vector<ModelEvidence> visited;
  /// Probabilities renormalized over the visited set from exact evidence.
  PosteriorSummary summary;
  std::int64_t accepted = 0;
  std::int64_t skipped_proposals = 0;
  /// The chain's state at each iteration, first chain only (for determinism
  /// checks; capped at 100000 entries).
  std::vector<std::uint64_t> trace;
};

/// Metropolis random walk over masks with single-bit-flip proposals. The
/// first iteration records the start model; each later one makes a proposal. Each
/// chain c uses generator seed `seed + c`. Proposals whose scorer returns
/// nullopt are skipped and counted.
Mc3Result mc3_search(const ModelScorer& scorer, int p, const Mc3Options& opts);

/// Generator used for every stochastic routine: std::mt19937_64, whose output
/// sequence is fixed by the standard, with our own mappings to uniform and
/// normal variates (the std distributions differ between implementations).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal (polar Box-Muller).
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace rbvs
