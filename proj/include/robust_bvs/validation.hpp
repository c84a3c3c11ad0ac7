#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "robust_bvs/oracle.hpp"

namespace rbvs {

enum class ValidationTier { fast, full };

struct PropertyResult {
  /// Short identifier, e.g. "closed-form-vs-oracle".
  std::string id;
  std::string description;
  bool passed = false;
  /// The statistic compared against the tolerance (worst error, final value,
  /// distance, ...), and the bound it had to respect.
  double observed = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// log B_i0 of the recommended prior at (n, k0, k_i, Q). Swappable so the
/// harness can be pointed at a deliberately broken implementation.
using ClosedFormBf = std::function<double(int n, int k0, int ki, double q)>;

/// log_bf_recommended(...).log_value.
double default_closed_form(int n, int k0, int ki, double q);

struct ValidationOptions {
  ValidationTier tier = ValidationTier::fast;
  ClosedFormBf closed_form = default_closed_form;
  std::uint64_t seed = 20240601;
  int threads = 1;
  /// Full tier only: where to write the consistency table (empty: not written).
  std::string consistency_tsv_path;
};

struct ValidationReport {
  std::vector<PropertyResult> results;
  bool all_passed() const;
  /// One "PASS|FAIL id: observed vs tolerance (detail)" line per property.
  std::string text() const;
};

// Individual properties. Tolerances are fixed inside each check.

/// Closed form against log_bf_quadrature on n in {5,20,100,500},
/// k0 in {1,2}, k_i in {1,2,5}, q in {1e-6,1e-2,0.5,0.99,1}; 1e-8 absolute in
/// log, and the whole grid in under 30 s.
PropertyResult check_closed_form_vs_oracle(const ClosedFormBf& closed_form);
/// Closed form against the general lambda-integral on n in {5,20,100}; 1e-8.
PropertyResult check_route_agreement(const ClosedFormBf& closed_form);
/// log BF strictly decreasing in q.
PropertyResult check_monotone_in_q(const ClosedFormBf& closed_form);
/// Q -> 1 limit at n = k0 + k_i + 1; 1e-6 relative.
PropertyResult check_q_to_one_limit(const ClosedFormBf& closed_form);
/// Null and dimensional predictive matching at n = k0 + k_i, 20 datasets;
/// 1e-8 relative.
PropertyResult check_null_predictive_matching(std::uint64_t seed);
/// Predictive matching at n = k0 + 1, 10 datasets; 1e-7 relative.
PropertyResult check_right_haar_matching(std::uint64_t seed);
/// Growth of log BF along q = 1e-2 ... 1e-10 at n = k0 + k_i + 1 with a = 1/2
/// (strictly increasing, final value above 20), plus the bounded branch for
/// a = 1 at the same n.
PropertyResult check_information_consistency(const ClosedFormBf& closed_form);
/// Known-sigma closed form against quadrature, 20 random draws; 1e-8.
PropertyResult check_sigma_known(std::uint64_t seed);
/// Robust prior density over the Student reference at |beta|^2 in
/// {1e2, 1e3, 1e4} for k_i in {1, 3}: monotone approach to 1, within 5% at 1e4.
PropertyResult check_student_tails();
/// Intrinsic-prior convergence: discrepancy decreasing over n in {20,200,2000}.
PropertyResult check_intrinsic_convergence();
/// Distinct presets give distinct Bayes factors (hyper-g vs recommended).
PropertyResult check_presets_differ(const ClosedFormBf& closed_form);
/// Seed-pinned consistency simulation: median Pr(M_true | y) nondecreasing in
/// n and at least 0.9 at the largest n. Rows are returned through `rows`.
PropertyResult check_model_selection_consistency(const oracle::ConsistencyConfig& config,
                                                 std::vector<oracle::ConsistencyRow>* rows = nullptr);
/// MC3 (50k iterations) against full enumeration on a p = 6 dataset;
/// total variation at most 0.02.
PropertyResult check_mc3_vs_enumeration(std::uint64_t seed);
/// y and column rescaling on a p = 4 dataset: log BF within 1e-9, posterior
/// probabilities within 1e-10.
PropertyResult check_invariance(std::uint64_t seed);
/// run_analyze twice with 1 and 4 workers: byte-identical JSON and CSV.
PropertyResult check_determinism(std::uint64_t seed);
/// Posterior probabilities equal direct normalization of oracle marginals
/// (p = 5); 1e-8.
PropertyResult check_posterior_vs_marginals(std::uint64_t seed);
/// Oracle chain: brute-force marginal ratio against log_bf_given_g (tiny
/// dataset) and the GLS marginal ratio at n = 10, k_i = 2; 1e-6 / 1e-7.
PropertyResult check_direct_oracle();

/// Fast tier: every check except the consistency simulation and the direct
/// integration oracle; full tier adds those (and writes the TSV when a path is
/// given).
ValidationReport run_validate(const ValidationOptions& options);

}  // namespace rbvs
