#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>

namespace rbvs {

/// Largest number of candidate covariates a ModelId can address.
inline constexpr int kMaxCandidates = 62;

/// A model in the 2^p lattice: bit j set means candidate covariate j is
/// included. The fixed block X0 is part of every model, so mask 0 is the null
/// model.
struct ModelId {
  std::uint64_t mask = 0;

  constexpr bool contains(int j) const noexcept { return (mask >> j) & 1U; }
  constexpr ModelId with_flipped(int j) const noexcept { return ModelId{mask ^ (std::uint64_t{1} << j)}; }
  static constexpr ModelId null_model() noexcept { return ModelId{0}; }

  friend constexpr auto operator<=>(ModelId, ModelId) = default;
};

inline constexpr int model_dimension(ModelId m) noexcept { return std::popcount(m.mask); }

/// Throws ConfigError if `mask` has bits at positions >= p.
void check_model(ModelId m, int p);

/// Lazily enumerates every mask over p candidates whose popcount is at most
/// max_dim, in ascending mask order. Nothing is materialized.
class ModelRange {
 public:
  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = ModelId;
    using difference_type = std::ptrdiff_t;
    using pointer = const ModelId*;
    using reference = ModelId;

    iterator() = default;
    ModelId operator*() const noexcept { return ModelId{current_}; }
    iterator& operator++() noexcept;
    iterator operator++(int) noexcept {
      iterator copy = *this;
      ++*this;
      return copy;
    }
    friend bool operator==(const iterator& a, const iterator& b) noexcept { return a.current_ == b.current_; }

   private:
    friend class ModelRange;
    iterator(std::uint64_t current, std::uint64_t end, int max_dim) noexcept
        : current_(current), end_(end), max_dim_(max_dim) {}
    std::uint64_t current_ = 0;
    std::uint64_t end_ = 0;
    int max_dim_ = 0;
  };

  ModelRange(int p, int max_dim) noexcept;

  iterator begin() const noexcept { return iterator(0, end_mask(), max_dim_); }
  iterator end() const noexcept { return iterator(end_mask(), end_mask(), max_dim_); }

  int candidates() const noexcept { return p_; }
  int max_dim() const noexcept { return max_dim_; }
  /// Number of masks the range yields: sum of C(p, d) for d <= max_dim.
  std::uint64_t size() const noexcept;

 private:
  std::uint64_t end_mask() const noexcept { return std::uint64_t{1} << p_; }
  int p_;
  int max_dim_;
};

/// Checked constructor for ModelRange. p must lie in [0, 62]; max_dim (when
/// given) in [0, p].
ModelRange enumerate_models(int p, std::optional<int> max_dim = std::nullopt);

/// log of the multiplicity-corrected prior odds P_j0 = k!(p-k)!/p! of a model
/// of dimension k against the null model.
double scott_berger_log_prior_odds(int k, int p);
double scott_berger_log_prior_odds(ModelId m, int p);

/// log of C(p, k).
double log_binomial(int p, int k);

}  // namespace rbvs
