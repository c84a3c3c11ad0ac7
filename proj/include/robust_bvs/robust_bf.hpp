#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>

#include "robust_bvs/design_linalg.hpp"

namespace rbvs {

/// How rho_i (and for some presets a and b) is chosen.
enum class RhoRule {
  recommended,      // rho = 1/(k0 + k_i), a and b as given (default 1/2, 1)
  constant,         // rho = rho_value, a and b as given
  hyper_g,          // a = 1/2, b = 1, rho = 1/(1 + n)
  hyper_g_over_n,   // a = 1/2, b = n, rho = 1/2
  cui_george,       // a = 1,   b = 1, rho = 1/(1 + n)
  berger_original,  // a = 1/2, b = 1, rho = (k_i + 1)/(k_i + 3)
};

std::string_view to_string(RhoRule rule);
std::optional<RhoRule> parse_rho_rule(std::string_view name);

struct Hyperparameters {
  double a = 0.5;
  double b = 1.0;
  RhoRule rule = RhoRule::recommended;
  double rho_value = 0.0;
  std::optional<double> sigma_known;

  static Hyperparameters preset(RhoRule rule);
};

/// Parameters of the mixing density
///   p(g) = a [rho (b+n)]^a (g+b)^-(a+1),  g > rho (b+n) - b,
/// for one model at sample size n.
struct MixingDensityParams {
  double a = 0.5;
  double b = 1.0;
  double rho = 1.0;
  int n = 1;

  double scale() const noexcept { return rho * (b + n); }
  double g_min() const noexcept { return scale() - b; }
};

/// Throws DomainError unless a > 0, b > 0, n >= 1 and rho >= b/(b+n).
void check_mixing_params(const MixingDensityParams& params);

/// Resolves the rule at (n, k0, k_i). For the null model (k_i = 0) rho is not
/// used and is not checked. Throws ConfigError when rho < b/(b+n).
MixingDensityParams resolve_rho(const Hyperparameters& hp, int n, int k0, int ki);

/// log p(g); -inf outside the support.
double log_mixing_density(double g, const MixingDensityParams& params);

enum class BayesFactorRoute {
  trivial,         // k_i = 0
  hypergeometric,  // closed form through 2F1
  incomplete_gamma,
  integral,        // one-dimensional quadrature
  saturated,       // Q = 0 with an information-consistent prior: +inf
};

std::string_view to_string(BayesFactorRoute route);

struct BayesFactor {
  double log_value = 0.0;
  BayesFactorRoute route = BayesFactorRoute::trivial;

  bool infinite() const noexcept { return route == BayesFactorRoute::saturated; }
};

inline constexpr double kDefaultBfRelTol = 1e-12;
/// Smallest Q used in log arithmetic; exact zero is handled separately.
inline constexpr double kMinQ = 1e-300;

/// log B_i0 for the general robust prior, evaluated as the one-dimensional
/// integral over lambda in (0, 1]
///
///   B = a [rho(b+n)]^{-k/2} Int lambda^{a+k/2-1} [1 - (b-1) lambda / (rho(b+n))]^{(n-k-k0)/2}
///         [Q (1 - b lambda/(rho(b+n))) + lambda/(rho(b+n))]^{-(n-k0)/2} d lambda
///
/// with Q^{-(n-k0)/2} kept inside the integrand so nothing overflows.
/// Requires n >= k0 + k_i + 1 and Q in [0, 1]; k0 = 0 gives the beta0 = 0
/// variant.
BayesFactor log_bf_general(const MixingDensityParams& params, int k0, int ki, double q,
                           double rel_tol = kDefaultBfRelTol);

/// log B_i0 for the recommended prior (a = 1/2, b = 1, rho = 1/(k0+k_i)),
///
///   B = [(n+1)/(k_i+k0)]^{-k_i/2} Q^{-(n-k0)/2}/(k_i+1)
///         2F1((k_i+1)/2, (n-k0)/2; (k_i+3)/2; (1 - 1/Q)(k_i+k0)/(n+1)).
///
/// Uses the 2F1 expression when the series converges and the integral of
/// log_bf_general otherwise; the returned route says which.
BayesFactor log_bf_recommended(int n, int k0, int ki, double q, double rel_tol = kDefaultBfRelTol);

/// The 2F1 expression alone. Throws NumericError if the series fails.
double log_bf_recommended_hypergeometric(int n, int k0, int ki, double q);

/// log B_i0 when sigma is known. For b = 1 this is the closed form
///
///   log a + a log R + s - (a + k/2) log s + log gamma_lower(a + k/2, s/R),
///
/// R = rho(1+n), s = (SSE0 - SSE_i)/(2 sigma^2). Other b, and s = 0, are
/// handled by quadrature over g of (g+1)^{-k/2} exp(s g/(g+1)) p(g).
BayesFactor log_bf_sigma_known(const MixingDensityParams& params, int ki, double sse0, double ssei,
                               double sigma, double rel_tol = kDefaultBfRelTol);

struct QToOneLimit {
  /// lim_{Q->1} B_i0 at n = k_i + k0 + 1: [rho (k_i+k0+2)]^{-k_i/2} / (k_i+1).
  double limit = 0.0;
  /// 2a/(2a + k_i), the bound on lim_{Q->1} B_i0 for any n.
  double ceiling = 0.0;
};

/// Only defined for a = 1/2 and b = 1; other values throw DomainError.
QToOneLimit limit_bf_q_to_one(const MixingDensityParams& params, int k0, int ki);

/// A point at which to evaluate the conditional prior of beta_i given sigma.
struct PriorDensityPoint {
  Eigen::VectorXd beta;
  double sigma = 1.0;
  Eigen::MatrixXd v_gram;  // V_i' V_i
};

/// log of the robust prior density
///   Int N_k(beta | 0, g sigma^2 (V'V)^-1) p(g) dg
/// by quadrature over g. Throws DomainError if v_gram is not positive definite.
double log_robust_prior_density(const PriorDensityPoint& point, const MixingDensityParams& params,
                                double rel_tol = 1e-10);
double robust_prior_density(const PriorDensityPoint& point, const MixingDensityParams& params,
                            double rel_tol = 1e-10);

/// log density of the multivariate Student reference that matches the robust
/// prior in the tails: 2a degrees of freedom and scale matrix
/// (a Gamma(a))^{1/a} rho sigma^2 (b+n) (V'V)^-1 / a.
double log_student_tail_reference(const PriorDensityPoint& point, const MixingDensityParams& params);

/// Large-n limit of the mixing density for g* = g/n when b/n -> c:
///   a [rho (c+1)]^a (g* + c)^{-(a+1)} on g* > rho (c+1) - c.
double intrinsic_mixing_density(double g_star, double rho, double c, double a);
double intrinsic_mixing_cdf(double g_star, double rho, double c, double a);

/// log B_i0 for one fitted model under `hp`. Handles sigma-known priors,
/// k_i = 0 and saturated fits. Throws on invalid hyperparameters.
BayesFactor log_bf_for_fit(const Hyperparameters& hp, const DesignContext& ctx, const ModelFit& fit,
                           double rel_tol = kDefaultBfRelTol);

}  // namespace rbvs
