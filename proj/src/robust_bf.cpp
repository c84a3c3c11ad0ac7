#include "robust_bvs/robust_bf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "robust_bvs/error.hpp"
#include "robust_bvs/quadrature.hpp"
#include "robust_bvs/special_functions.hpp"

namespace rbvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_add(double x, double y) {
  if (x == -kInf) return y;
  if (y == -kInf) return x;
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

// Integral over u = log(lambda) in (-inf, 0] of exp(log_integrand(u)).
// Below u_lo the integrand is treated as exp(log_integrand(u_lo) + slope (u - u_lo)),
// which the caller guarantees to within double precision; that head is added
// in closed form.
double integrate_lambda(const std::function<double(double)>& log_integrand, double u_lo, double head_slope,
                        std::vector<double> breakpoints, double rel_tol) {
  QuadratureOptions opts;
  opts.rel_tol = rel_tol;
  opts.breakpoints = std::move(breakpoints);
  const QuadratureResult body = integrate_log(log_integrand, u_lo, 0.0, opts);
  const double head = log_integrand(u_lo) - std::log(head_slope);
  return log_add(head, body.value);
}

std::vector<double> breakpoints_around(double center, double lo, double hi) {
  std::vector<double> out;
  for (double d : {-8.0, -3.0, -1.0, 0.0, 1.0, 3.0}) {
    const double u = center + d;
    if (u > lo && u < hi) out.push_back(u);
  }
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw DomainError(message);
}

}  // namespace

std::string_view to_string(RhoRule rule) {
  switch (rule) {
    case RhoRule::recommended:
      return "recommended";
    case RhoRule::constant:
      return "constant";
    case RhoRule::hyper_g:
      return "hyper-g";
    case RhoRule::hyper_g_over_n:
      return "hyper-g/n";
    case RhoRule::cui_george:
      return "cui-george";
    case RhoRule::berger_original:
      return "berger-original";
  }
  return "unknown";
}

std::optional<RhoRule> parse_rho_rule(std::string_view name) {
  for (RhoRule r : {RhoRule::recommended, RhoRule::constant, RhoRule::hyper_g, RhoRule::hyper_g_over_n,
                    RhoRule::cui_george, RhoRule::berger_original})
    if (name == to_string(r)) return r;
  if (name == "hyper_g") return RhoRule::hyper_g;
  if (name == "hyper_g_over_n" || name == "hyper-g-n") return RhoRule::hyper_g_over_n;
  if (name == "cui_george") return RhoRule::cui_george;
  if (name == "berger_original" || name == "berger") return RhoRule::berger_original;
  return std::nullopt;
}

std::string_view to_string(BayesFactorRoute route) {
  switch (route) {
    case BayesFactorRoute::trivial:
      return "trivial";
    case BayesFactorRoute::hypergeometric:
      return "hypergeometric";
    case BayesFactorRoute::incomplete_gamma:
      return "incomplete-gamma";
    case BayesFactorRoute::integral:
      return "integral";
    case BayesFactorRoute::saturated:
      return "saturated";
  }
  return "unknown";
}

Hyperparameters Hyperparameters::preset(RhoRule rule) {
  Hyperparameters hp;
  hp.rule = rule;
  if (rule == RhoRule::cui_george) hp.a = 1.0;
  return hp;
}

void check_mixing_params(const MixingDensityParams& params) {
  require(params.a > 0.0 && std::isfinite(params.a), "mixing density needs a > 0");
  require(params.b > 0.0 && std::isfinite(params.b), "mixing density needs b > 0");
  require(params.n >= 1, "mixing density needs n >= 1");
  const double bound = params.b / (params.b + params.n);
  if (!(params.rho >= bound * (1.0 - 1e-12)) || !std::isfinite(params.rho))
    throw DomainError("invalid hyperparameters: rho = " + std::to_string(params.rho) +
                      " violates rho >= b/(b+n) = " + std::to_string(bound) +
                      " (the mixing density must be proper with g >= 0)");
}

MixingDensityParams resolve_rho(const Hyperparameters& hp, int n, int k0, int ki) {
  if (n < 1) throw ConfigError("sample size must be at least 1");
  if (k0 < 0 || ki < 0) throw ConfigError("model dimensions must be non-negative");
  MixingDensityParams out{hp.a, hp.b, 1.0, n};
  switch (hp.rule) {
    case RhoRule::recommended:
      out.rho = k0 + ki > 0 ? 1.0 / (k0 + ki) : 1.0;
      break;
    case RhoRule::constant:
      out.rho = hp.rho_value;
      break;
    case RhoRule::hyper_g:
      out = {0.5, 1.0, 1.0 / (1.0 + n), n};
      break;
    case RhoRule::hyper_g_over_n:
      out = {0.5, static_cast<double>(n), 0.5, n};
      break;
    case RhoRule::cui_george:
      out = {1.0, 1.0, 1.0 / (1.0 + n), n};
      break;
    case RhoRule::berger_original:
      out = {0.5, 1.0, (ki + 1.0) / (ki + 3.0), n};
      break;
  }
  if (!(out.a > 0.0)) throw ConfigError("hyperparameter a must be positive");
  if (!(out.b > 0.0)) throw ConfigError("hyperparameter b must be positive");
  if (ki > 0) {
    const double bound = out.b / (out.b + n);
    if (!(out.rho >= bound * (1.0 - 1e-12)))
      throw ConfigError("invalid hyperparameters: rho = " + std::to_string(out.rho) + " < b/(b+n) = " +
                        std::to_string(bound) + " at n = " + std::to_string(n) +
                        "; the constraint rho >= b/(b+n) is required for a proper mixing density");
  }
  return out;
}

double log_mixing_density(double g, const MixingDensityParams& params) {
  const double g_min = std::max(0.0, params.g_min());
  if (!(g > g_min)) return -kInf;
  return std::log(params.a) + params.a * std::log(params.scale()) - (params.a + 1.0) * std::log(g + params.b);
}

BayesFactor log_bf_general(const MixingDensityParams& params, int k0, int ki, double q, double rel_tol) {
  check_mixing_params(params);
  require(k0 >= 0 && ki >= 0, "model dimensions must be non-negative");
  if (ki == 0) return {0.0, BayesFactorRoute::trivial};
  const int n = params.n;
  require(n >= k0 + ki + 1, "Bayes factor needs n >= k0 + k_i + 1 (n = " + std::to_string(n) +
                                ", k0 = " + std::to_string(k0) + ", k_i = " + std::to_string(ki) + ")");
  require(q >= 0.0 && q <= 1.0, "Q must lie in [0, 1], got " + std::to_string(q));

  const double a = params.a;
  const double b = params.b;
  const double scale = params.scale();
  const double log_scale = std::log(scale);
  const double half_resid = 0.5 * (n - ki - k0);
  const double half_null = 0.5 * (n - k0);
  const double power = a + 0.5 * ki;
  const double log_b_minus_1 = b != 1.0 ? std::log(std::abs(b - 1.0)) - log_scale : 0.0;
  const bool b_above_one = b > 1.0;

  if (q == 0.0 && half_null >= power) return {kInf, BayesFactorRoute::saturated};
  const bool exact_zero = q == 0.0;
  if (!exact_zero) q = std::max(q, kMinQ);
  const double log_q = exact_zero ? -kInf : std::log(q);
  // Q + lambda (1 - bQ)/R written as Q (1 + lambda c) with c = (1 - bQ)/(QR).
  const double one_minus_bq = 1.0 - b * q;
  const double log_c = exact_zero ? 0.0 : std::log(std::abs(one_minus_bq)) - log_q - log_scale;
  const int c_sign = one_minus_bq >= 0.0 ? 1 : -1;

  auto log_integrand = [=](double u) {
    double value = power * u;
    if (b != 1.0) {
      const double t = std::exp(u + log_b_minus_1);
      value += half_resid * std::log1p(b_above_one ? -t : t);
    }
    double log_inner;
    if (exact_zero) {
      log_inner = u - log_scale;
    } else if (one_minus_bq == 0.0) {
      log_inner = log_q;
    } else {
      const double t = std::exp(u + log_c);
      log_inner = log_q + std::log1p(c_sign > 0 ? t : -t);
    }
    return value - half_null * log_inner;
  };

  // Below lambda_lo every factor except lambda^power is constant to ~1e-17.
  double lambda_lo = 1.0;
  if (!exact_zero && one_minus_bq != 0.0) lambda_lo = std::min(lambda_lo, std::exp(-log_c));
  if (b != 1.0) lambda_lo = std::min(lambda_lo, std::exp(-log_b_minus_1));
  const double u_lo = std::log(lambda_lo) - std::log(1e17 * (n + 1.0));
  std::vector<double> breaks;
  if (!exact_zero && c_sign > 0) breaks = breakpoints_around(-log_c, u_lo, 0.0);
  const double slope = exact_zero ? power - half_null : power;
  const double log_integral = integrate_lambda(log_integrand, u_lo, slope, breaks, rel_tol);
  return {std::log(a) - 0.5 * ki * log_scale + log_integral, BayesFactorRoute::integral};
}

double log_bf_recommended_hypergeometric(int n, int k0, int ki, double q) {
  require(k0 >= 0 && ki >= 1, "need k0 >= 0 and k_i >= 1");
  require(n >= k0 + ki + 1, "Bayes factor needs n >= k0 + k_i + 1");
  require(q > 0.0 && q <= 1.0, "Q must lie in (0, 1]");
  q = std::max(q, kMinQ);
  const double log_scale = std::log((n + 1.0) / (ki + k0));
  const double z = -(1.0 / q - 1.0) / ((n + 1.0) / (ki + k0));
  const HypergeometricResult f = log_gauss_2f1(0.5 * (ki + 1), 0.5 * (n - k0), 0.5 * (ki + 3), z);
  if (f.value.sign < 0) throw NumericError("2F1 evaluated negative in the recommended Bayes factor");
  return -0.5 * ki * log_scale - 0.5 * (n - k0) * std::log(q) - std::log(ki + 1.0) + f.value.log_abs;
}

BayesFactor log_bf_recommended(int n, int k0, int ki, double q, double rel_tol) {
  require(k0 >= 0 && ki >= 0, "model dimensions must be non-negative");
  if (ki == 0) return {0.0, BayesFactorRoute::trivial};
  require(n >= k0 + ki + 1, "Bayes factor needs n >= k0 + k_i + 1 (n = " + std::to_string(n) +
                                ", k0 = " + std::to_string(k0) + ", k_i = " + std::to_string(ki) + ")");
  require(q >= 0.0 && q <= 1.0, "Q must lie in [0, 1], got " + std::to_string(q));
  if (q == 0.0) return {kInf, BayesFactorRoute::saturated};

  // The Pfaff series used for these parameters has positive terms that peak
  // near j ~ beta w / (1 - w); skip it when that is beyond the term cap.
  const double scale = (n + 1.0) / (ki + k0);
  const double minus_z = (1.0 / std::max(q, kMinQ) - 1.0) / scale;
  const double one_minus_w = 1.0 / (1.0 + minus_z);
  const double peak = 0.5 * (n - k0) * (1.0 - one_minus_w) / one_minus_w;
  if (peak < 0.25 * static_cast<double>(kHypergeometricTermCap)) {
    try {
      return {log_bf_recommended_hypergeometric(n, k0, ki, q), BayesFactorRoute::hypergeometric};
    } catch (const NumericError&) {
      // fall through to the integral
    }
  }
  const MixingDensityParams params{0.5, 1.0, 1.0 / (ki + k0), n};
  return log_bf_general(params, k0, ki, q, rel_tol);
}

BayesFactor log_bf_sigma_known(const MixingDensityParams& params, int ki, double sse0, double ssei, double sigma,
                               double rel_tol) {
  check_mixing_params(params);
  require(ki >= 0, "model dimension must be non-negative");
  if (ki == 0) return {0.0, BayesFactorRoute::trivial};
  require(sigma > 0.0 && std::isfinite(sigma), "known sigma must be positive");
  require(ssei >= 0.0 && sse0 >= ssei, "need SSE0 >= SSE_i >= 0");
  const double s = (sse0 - ssei) / (2.0 * sigma * sigma);
  const double a = params.a;
  const double b = params.b;
  const double scale = params.scale();
  const double power = a + 0.5 * ki;

  if (b == 1.0 && s > 0.0) {
    const double log_s = std::log(s);
    const double value = std::log(a) + a * std::log(scale) + s - power * log_s +
                         log_lower_incomplete_gamma(power, s / scale);
    return {value, BayesFactorRoute::incomplete_gamma};
  }

  // lambda = R/(g+b): p(g) dg = a lambda^(a-1) d lambda,
  // (g+1)^(-k/2) = (lambda/(R - (b-1) lambda))^(k/2),
  // g/(g+1) = (R - b lambda)/(R - (b-1) lambda).
  auto log_integrand = [=](double u) {
    const double lambda = std::exp(u);
    const double denom = scale - (b - 1.0) * lambda;
    return power * u - 0.5 * ki * std::log(denom) + s * (scale - b * lambda) / denom;
  };
  double lambda_lo = 1.0;
  if (b != 1.0) lambda_lo = std::min(lambda_lo, scale / std::abs(b - 1.0));
  if (s > 0.0) lambda_lo = std::min(lambda_lo, scale / (s * (b + 1.0)));
  const double u_lo = std::log(lambda_lo) - std::log(1e17 * (params.n + 1.0));
  const double log_integral = integrate_lambda(log_integrand, u_lo, power, {}, rel_tol);
  return {std::log(a) + log_integral, BayesFactorRoute::integral};
}

QToOneLimit limit_bf_q_to_one(const MixingDensityParams& params, int k0, int ki) {
  check_mixing_params(params);
  require(k0 >= 0 && ki >= 0, "model dimensions must be non-negative");
  if (params.a != 0.5 || params.b != 1.0)
    throw DomainError("the Q -> 1 limit is only available for a = 1/2 and b = 1");
  QToOneLimit out;
  out.limit = std::exp(-0.5 * ki * std::log(params.rho * (ki + k0 + 2.0))) / (ki + 1.0);
  out.ceiling = 2.0 * params.a / (2.0 * params.a + ki);
  return out;
}

namespace {

struct GramFactor {
  double log_det = 0.0;
  double quad = 0.0;  // beta' A beta
  int k = 0;
};

GramFactor factor_gram(const PriorDensityPoint& point) {
  const auto k = point.beta.size();
  if (k < 1) throw DomainError("prior density needs k_i >= 1");
  if (point.v_gram.rows() != k || point.v_gram.cols() != k)
    throw DomainError("v_gram must be k_i x k_i");
  if (!(point.sigma > 0.0)) throw DomainError("sigma must be positive");
  if (!point.v_gram.isApprox(point.v_gram.transpose(), 1e-12)) throw DomainError("v_gram must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(point.v_gram);
  if (llt.info() != Eigen::Success) throw DomainError("v_gram must be positive definite");
  GramFactor out;
  out.k = static_cast<int>(k);
  out.log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.quad = point.beta.dot(point.v_gram * point.beta);
  return out;
}

}  // namespace

double log_robust_prior_density(const PriorDensityPoint& point, const MixingDensityParams& params, double rel_tol) {
  check_mixing_params(params);
  const GramFactor gf = factor_gram(point);
  const double s2 = point.sigma * point.sigma;
  const double k = gf.k;
  const double a = params.a;
  const double b = params.b;
  const double g_min = std::max(0.0, params.g_min());
  if (gf.quad == 0.0 && g_min == 0.0 && gf.k >= 2) return kInf;

  // u = log(g + b) over [log(g_min + b), inf); dg = e^u du.
  const double log_norm_const = std::log(a) + a * std::log(params.scale());
  auto log_integrand = [=](double u) {
    const double g = std::exp(u) - b;
    if (!(g > 0.0)) return -kInf;
    const double log_normal = -0.5 * k * (kLog2Pi + std::log(g * s2)) + 0.5 * gf.log_det - gf.quad / (2.0 * g * s2);
    return log_normal + log_norm_const - a * u;
  };
  const double u_lo = std::log(g_min + b);
  // The integrand peaks near g ~ beta'A beta / (k sigma^2).
  const double g_peak = std::max(gf.quad / (k * s2), 1e-300);
  std::vector<double> breaks = breakpoints_around(std::log(g_peak + b), u_lo, kInf);
  QuadratureOptions opts;
  opts.rel_tol = rel_tol;
  opts.breakpoints = std::move(breaks);
  return integrate_log(log_integrand, u_lo, kInf, opts).value;
}

double robust_prior_density(const PriorDensityPoint& point, const MixingDensityParams& params, double rel_tol) {
  return std::exp(log_robust_prior_density(point, params, rel_tol));
}

double log_student_tail_reference(const PriorDensityPoint& point, const MixingDensityParams& params) {
  check_mixing_params(params);
  const GramFactor gf = factor_gram(point);
  const double a = params.a;
  const double k = gf.k;
  const double log_kappa = (std::log(a) + log_gamma(a)) / a;  // log (a Gamma(a))^(1/a)
  const double log_scale = log_kappa + std::log(point.sigma * point.sigma * params.scale());
  return log_gamma(a + 0.5 * k) - log_gamma(a) - 0.5 * k * kLog2Pi - 0.5 * k * log_scale + 0.5 * gf.log_det -
         (a + 0.5 * k) * std::log1p(gf.quad / (2.0 * std::exp(log_scale)));
}

namespace {

void check_intrinsic(double rho, double c, double a) {
  require(a > 0.0, "intrinsic mixing density needs a > 0");
  require(c >= 0.0, "intrinsic mixing density needs c >= 0");
  require(rho > 0.0 && rho * (c + 1.0) >= c, "intrinsic mixing density needs rho (c+1) >= c");
}

}  // namespace

double intrinsic_mixing_density(double g_star, double rho, double c, double a) {
  check_intrinsic(rho, c, a);
  const double lower = rho * (c + 1.0) - c;
  if (!(g_star > lower)) return 0.0;
  return a * std::pow(rho * (c + 1.0), a) * std::pow(g_star + c, -(a + 1.0));
}

double intrinsic_mixing_cdf(double g_star, double rho, double c, double a) {
  check_intrinsic(rho, c, a);
  const double lower = rho * (c + 1.0) - c;
  if (!(g_star > lower)) return 0.0;
  return 1.0 - std::pow(rho * (c + 1.0) / (g_star + c), a);
}

BayesFactor log_bf_for_fit(const Hyperparameters& hp, const DesignContext& ctx, const ModelFit& fit,
                           double rel_tol) {
  if (fit.k == 0) return {0.0, BayesFactorRoute::trivial};
  const int n = ctx.n();
  const int k0 = ctx.k0();
  const MixingDensityParams params = resolve_rho(hp, n, k0, fit.k);
  if (hp.sigma_known) return log_bf_sigma_known(params, fit.k, ctx.null_sse(), fit.sse, *hp.sigma_known, rel_tol);
  // With n = k0 + k_i every model reproduces y exactly and the marginals of
  // M_i and M_0 coincide.
  if (n == k0 + fit.k) return {0.0, BayesFactorRoute::trivial};
  if (hp.rule == RhoRule::recommended && params.a == 0.5 && params.b == 1.0)
    return log_bf_recommended(n, k0, fit.k, fit.q, rel_tol);
  return log_bf_general(params, k0, fit.k, fit.q, rel_tol);
}

}  // namespace rbvs
