#include "robust_bvs/model_space.hpp"

#include <string>

#include "robust_bvs/error.hpp"
#include "robust_bvs/special_functions.hpp"

namespace rbvs {

void check_model(ModelId m, int p) {
  if (p < 0 || p > kMaxCandidates) throw ConfigError("number of candidates must be in [0, 62], got " + std::to_string(p));
  if (p < 64 && (m.mask >> p) != 0)
    throw ConfigError("model mask " + std::to_string(m.mask) + " has bits beyond p = " + std::to_string(p));
}

ModelRange::iterator& ModelRange::iterator::operator++() noexcept {
  std::uint64_t x = current_ + 1;
  // Any y in [x, x + lowbit(x)) keeps every bit of x from lowbit upward, so its
  // popcount is at least popcount(x); those masks can be skipped wholesale.
  while (x < end_ && std::popcount(x) > max_dim_) x += x & (~x + 1);
  current_ = x < end_ ? x : end_;
  return *this;
}

ModelRange::ModelRange(int p, int max_dim) noexcept : p_(p), max_dim_(max_dim) {}

std::uint64_t ModelRange::size() const noexcept {
  // sum_{d <= max_dim} C(p, d); exact in 64 bits for p <= 62.
  std::uint64_t total = 0;
  std::uint64_t binom = 1;
  for (int d = 0; d <= max_dim_; ++d) {
    total += binom;
    binom = binom * static_cast<std::uint64_t>(p_ - d) / static_cast<std::uint64_t>(d + 1);
  }
  return total;
}

ModelRange enumerate_models(int p, std::optional<int> max_dim) {
  if (p < 0 || p > kMaxCandidates) throw ConfigError("number of candidates must be in [0, 62], got " + std::to_string(p));
  const int cap = max_dim.value_or(p);
  if (cap < 0 || cap > p)
    throw ConfigError("max_dim must be in [0, p] (p = " + std::to_string(p) + "), got " + std::to_string(cap));
  return ModelRange(p, cap);
}

double log_binomial(int p, int k) {
  if (k < 0 || k > p) throw ConfigError("log_binomial: need 0 <= k <= p");
  return log_gamma(p + 1.0) - log_gamma(k + 1.0) - log_gamma(p - k + 1.0);
}

double scott_berger_log_prior_odds(int k, int p) {
  if (p < 0 || k < 0 || k > p) throw ConfigError("prior odds: need 0 <= k <= p");
  if (k == 0 || k == p) return 0.0;
  return -log_binomial(p, k);
}

double scott_berger_log_prior_odds(ModelId m, int p) {
  check_model(m, p);
  return scott_berger_log_prior_odds(model_dimension(m), p);
}

}  // namespace rbvs
