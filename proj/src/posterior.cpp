#include "robust_bvs/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "robust_bvs/error.hpp"

namespace rbvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool by_probability(const ModelProbability& x, const ModelProbability& y) {
  if (x.probability != y.probability) return x.probability > y.probability;
  return x.model.mask < y.model.mask;
}

}  // namespace

PosteriorSummary posterior_model_probs(const std::vector<ModelEvidence>& evidence, int p) {
  if (p < 0 || p > kMaxCandidates) throw ConfigError("number of candidates must be in [0, 62]");
  bool have_null = false;
  for (const auto& e : evidence) {
    check_model(e.model, p);
    if (std::isnan(e.log_bf) || std::isnan(e.log_prior_odds) || e.log_bf == -kInf)
      throw NumericError("model " + std::to_string(e.model.mask) + " has an invalid log Bayes factor");
    if (!std::isfinite(e.log_prior_odds))
      throw ConfigError("model " + std::to_string(e.model.mask) + " has non-finite prior odds");
    if (e.model.mask == 0) have_null = true;
  }
  if (!have_null) throw ConfigError("posterior probabilities need the null model among the evaluated models");
  {
    std::vector<std::uint64_t> masks;
    masks.reserve(evidence.size());
    for (const auto& e : evidence) masks.push_back(e.model.mask);
    std::sort(masks.begin(), masks.end());
    if (std::adjacent_find(masks.begin(), masks.end()) != masks.end())
      throw ConfigError("a model appears more than once in the evidence list");
  }

  const bool any_infinite =
      std::any_of(evidence.begin(), evidence.end(), [](const ModelEvidence& e) { return e.log_bf == kInf; });
  // Log weights: log BF + log odds; with saturated models only those count,
  // weighted by their prior odds.
  std::vector<double> weight(evidence.size(), -kInf);
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    const auto& e = evidence[i];
    if (any_infinite)
      weight[i] = e.log_bf == kInf ? e.log_prior_odds : -kInf;
    else
      weight[i] = e.log_bf + e.log_prior_odds;
  }
  const double peak = *std::max_element(weight.begin(), weight.end());
  double total = 0.0;
  for (double w : weight) total += std::exp(w - peak);

  PosteriorSummary out;
  out.model_probs.reserve(evidence.size());
  for (std::size_t i = 0; i < evidence.size(); ++i)
    out.model_probs.push_back({evidence[i].model, std::exp(weight[i] - peak) / total});
  std::sort(out.model_probs.begin(), out.model_probs.end(), by_probability);
  out.normalizing_log_const = any_infinite ? kInf : peak + std::log(total);
  out.inclusion_probs = inclusion_probabilities(out.model_probs, p);
  out.hpm = out.model_probs.front().model;
  out.mpm = median_probability_model(out.inclusion_probs);
  return out;
}

std::vector<double> inclusion_probabilities(const std::vector<ModelProbability>& probs, int p) {
  if (p < 0 || p > kMaxCandidates) throw ConfigError("number of candidates must be in [0, 62]");
  std::vector<double> out(static_cast<std::size_t>(p), 0.0);
  for (const auto& mp : probs) {
    std::uint64_t mask = mp.model.mask;
    while (mask != 0) {
      const int j = std::countr_zero(mask);
      if (j >= p) throw ConfigError("model mask has bits beyond p");
      out[static_cast<std::size_t>(j)] += mp.probability;
      mask &= mask - 1;
    }
  }
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

ModelId median_probability_model(const std::vector<double>& inclusion) {
  if (inclusion.size() > static_cast<std::size_t>(kMaxCandidates))
    throw ConfigError("inclusion vector longer than 62");
  ModelId out;
  for (std::size_t j = 0; j < inclusion.size(); ++j)
    if (inclusion[j] > 0.5) out.mask |= std::uint64_t{1} << j;
  return out;
}

ModelId highest_posterior_model(const std::vector<ModelEvidence>& evidence) {
  if (evidence.empty()) throw ConfigError("highest posterior model of an empty set");
  const bool any_infinite =
      std::any_of(evidence.begin(), evidence.end(), [](const ModelEvidence& e) { return e.log_bf == kInf; });
  const ModelEvidence* best = nullptr;
  double best_weight = -kInf;
  for (const auto& e : evidence) {
    double w;
    if (any_infinite)
      w = e.log_bf == kInf ? e.log_prior_odds : -kInf;
    else
      w = e.log_bf + e.log_prior_odds;
    if (best == nullptr || w > best_weight || (w == best_weight && e.model.mask < best->model.mask)) {
      best = &e;
      best_weight = w;
    }
  }
  return best->model;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ConfigError("Rng::below needs a positive bound");
  // Reject the low end so that every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      const double f = std::sqrt(-2.0 * std::log(s) / s);
      spare_ = v * f;
      return u * f;
    }
  }
}

namespace {

double log_weight(const ModelEvidence& e) { return e.log_bf + e.log_prior_odds; }

// log of the Metropolis acceptance probability, handling saturated models.
double log_accept(const ModelEvidence& from, const ModelEvidence& to) {
  const bool from_inf = from.log_bf == kInf;
  const bool to_inf = to.log_bf == kInf;
  if (from_inf != to_inf) return to_inf ? 0.0 : -kInf;
  if (from_inf) return std::min(0.0, to.log_prior_odds - from.log_prior_odds);
  return std::min(0.0, log_weight(to) - log_weight(from));
}

}  // namespace

Mc3Result mc3_search(const ModelScorer& scorer, int p, const Mc3Options& opts) {
  if (p < 0 || p > kMaxCandidates) throw ConfigError("number of candidates must be in [0, 62]");
  if (opts.iterations < 1) throw ConfigError("MC3 needs at least one iteration");
  if (opts.chains < 1) throw ConfigError("MC3 needs at least one chain");
  check_model(opts.start, p);

  std::unordered_map<std::uint64_t, std::optional<ModelEvidence>> cache;
  auto score = [&](ModelId m) -> const std::optional<ModelEvidence>& {
    auto it = cache.find(m.mask);
    if (it == cache.end()) it = cache.emplace(m.mask, scorer(m)).first;
    return it->second;
  };

  Mc3Result out;
  if (!score(ModelId::null_model())) throw DataError("the null model cannot be scored");
  if (!score(opts.start)) throw DataError("the MC3 start model cannot be scored");
  constexpr std::size_t kTraceCap = 100000;

  for (int chain = 0; chain < opts.chains; ++chain) {
    Rng rng(opts.seed + static_cast<std::uint64_t>(chain));
    ModelId state = opts.start;
    ModelEvidence current = *score(state);
    for (std::int64_t it = 0; it < opts.iterations; ++it) {
      // The first iteration records the start state.
      if (it > 0 && p > 0) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(p)));
        const ModelId proposal = state.with_flipped(j);
        const auto& candidate = score(proposal);
        if (!candidate) {
          ++out.skipped_proposals;
        } else {
          const double u = rng.uniform();
          if (std::log(u) < log_accept(current, *candidate)) {
            state = proposal;
            current = *candidate;
            ++out.accepted;
          }
        }
      }
      ++out.tallies[state.mask];
      if (chain == 0 && out.trace.size() < kTraceCap) out.trace.push_back(state.mask);
    }
  }

  // The null model is always part of the normalizing set; its evidence is
  // exact (B = 1) whether or not a chain visited it.
  std::vector<std::uint64_t> masks;
  for (const auto& [mask, count] : out.tallies) masks.push_back(mask);
  if (!out.tallies.contains(0)) masks.push_back(0);
  std::sort(masks.begin(), masks.end());
  for (std::uint64_t mask : masks) out.visited.push_back(*score(ModelId{mask}));
  out.summary = posterior_model_probs(out.visited, p);
  return out;
}

}  // namespace rbvs
