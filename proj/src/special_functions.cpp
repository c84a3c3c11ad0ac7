#include "robust_bvs/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "robust_bvs/error.hpp"

namespace rbvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;
constexpr int kIncompleteGammaMaxIter = 1'000'000;

// Stirling series for x >= 10, Bernoulli terms through B_16; truncation error
// is below 1e-17 relative there.
double log_gamma_stirling(double x) {
  static constexpr double kCoeff[] = {
      1.0 / 12.0,        -1.0 / 360.0,        1.0 / 1260.0,   -1.0 / 1680.0,
      1.0 / 1188.0,      -691.0 / 360360.0,   1.0 / 156.0,    -3617.0 / 122400.0,
  };
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  for (int i = 7; i >= 0; --i) series = series * inv2 + kCoeff[i];
  series *= inv;
  return (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series;
}

}  // namespace

void LogSumAccumulator::add(double log_abs, int sign) {
  if (log_abs == -kInf) return;
  if (log_abs > scale_) {
    if (scale_ != -kInf) {
      const double f = std::exp(scale_ - log_abs);
      sum_ *= f;
      compensation_ *= f;
    }
    scale_ = log_abs;
  }
  const double term = sign * std::exp(log_abs - scale_);
  const double t = sum_ + term;
  if (std::abs(sum_) >= std::abs(term))
    compensation_ += (sum_ - t) + term;
  else
    compensation_ += (term - t) + sum_;
  sum_ = t;
}

SignedLog LogSumAccumulator::result() const {
  const double total = sum_ + compensation_;
  if (total == 0.0 || scale_ == -kInf) return SignedLog{};
  return SignedLog{scale_ + std::log(std::abs(total)), total < 0 ? -1 : 1};
}

double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive, got " + std::to_string(x));
  if (x == kInf) return kInf;
  if (x == 1.0 || x == 2.0) return 0.0;
  if (x >= 10.0) return log_gamma_stirling(x);
  // Shift up with Gamma(x) = Gamma(x + m) / (x (x+1) ... (x+m-1)).
  double product = 1.0;
  double shifted = x;
  while (shifted < 10.0) {
    product *= shifted;
    shifted += 1.0;
  }
  return log_gamma_stirling(shifted) - std::log(product);
}

namespace {

// log of gamma_lower(s, x) by its power series; converges for all x but is
// used for x < s + 1.
double log_lower_gamma_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int i = 1; i < kIncompleteGammaMaxIter; ++i) {
    term *= x / (s + i);
    sum += term;
    if (term < sum * kEps * 0.5) return -x + s * std::log(x) + std::log(sum);
  }
  throw NumericError("incomplete gamma series did not converge for s = " + std::to_string(s) +
                     ", x = " + std::to_string(x));
}

// log of Gamma(s, x) by the Legendre continued fraction (modified Lentz);
// used for x >= s + 1.
double log_upper_gamma_cf(double s, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kIncompleteGammaMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return -x + s * std::log(x) + std::log(h);
  }
  throw NumericError("incomplete gamma continued fraction did not converge for s = " + std::to_string(s) +
                     ", x = " + std::to_string(x));
}

void check_incomplete_gamma_args(double s, double x, const char* name) {
  if (!(s > 0.0) || !(x >= 0.0) || std::isnan(x))
    throw DomainError(std::string(name) + ": need s > 0 and x >= 0, got s = " + std::to_string(s) +
                      ", x = " + std::to_string(x));
}

}  // namespace

double log_upper_incomplete_gamma(double s, double x) {
  check_incomplete_gamma_args(s, x, "log_upper_incomplete_gamma");
  if (x == 0.0) return log_gamma(s);
  if (x == kInf) return -kInf;
  if (x < s + 1.0) {
    const double lg = log_gamma(s);
    return lg + std::log1p(-std::exp(log_lower_gamma_series(s, x) - lg));
  }
  return log_upper_gamma_cf(s, x);
}

double log_lower_incomplete_gamma(double s, double x) {
  check_incomplete_gamma_args(s, x, "log_lower_incomplete_gamma");
  if (x == 0.0) return -kInf;
  if (x == kInf) return log_gamma(s);
  if (x < s + 1.0) return log_lower_gamma_series(s, x);
  const double lg = log_gamma(s);
  return lg + std::log1p(-std::exp(log_upper_gamma_cf(s, x) - lg));
}

namespace {

bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::floor(v); }

// Sum of the 2F1 power series in `z`, times exp(log_prefactor).
HypergeometricResult hypergeometric_series(double a, double b, double c, double z, double log_prefactor,
                                           HypergeometricRoute route, std::int64_t term_cap) {
  HypergeometricResult out;
  out.route = route;
  LogSumAccumulator acc;
  double log_term = 0.0;
  int sign = 1;
  acc.add(0.0, 1);
  const double abs_z = std::abs(z);
  // Past this index every Pochhammer factor is positive and the term ratio
  // approaches |z| monotonically.
  const double settle = std::max({0.0, -a, -b, -c}) + 2.0;
  std::int64_t j = 0;
  for (;; ++j) {
    if (j >= term_cap) {
      std::ostringstream msg;
      msg << "2F1(" << a << ", " << b << "; " << c << "; " << z << ") did not converge within " << term_cap
          << " terms";
      throw NumericError(msg.str());
    }
    const double jd = static_cast<double>(j);
    const double factor = (a + jd) * (b + jd) / ((c + jd) * (jd + 1.0));
    if (factor == 0.0) {  // terminating series
      ++j;
      break;
    }
    const double ratio = factor * z;
    log_term += std::log(std::abs(ratio));
    if (ratio < 0) sign = -sign;
    acc.add(log_term, sign);
    const SignedLog partial = acc.result();
    if (jd + 1.0 >= settle) {
      const double next_factor = std::abs((a + jd + 1.0) * (b + jd + 1.0) / ((c + jd + 1.0) * (jd + 2.0)));
      const double r = abs_z * std::max(next_factor, 1.0);
      if (r < 1.0) {
        const double log_tail = log_term + std::log(r / (1.0 - r));
        if (log_tail < partial.log_abs + std::log(kEps * 0.25)) {
          ++j;
          break;
        }
      }
    }
  }
  const SignedLog sum = acc.result();
  out.terms = j + 1;
  out.value = SignedLog{sum.log_abs + log_prefactor, sum.sign};
  out.cancellation_digits = std::max(0.0, (acc.peak() - sum.log_abs) / std::log(10.0));
  return out;
}

void check_2f1_args(double gamma, double z) {
  if (!(gamma > 0.0)) throw DomainError("2F1: gamma must be positive, got " + std::to_string(gamma));
  if (!(z <= 0.0)) throw DomainError("2F1: only z <= 0 is supported, got z = " + std::to_string(z));
}

HypergeometricResult trivial_one() {
  HypergeometricResult out;
  out.value = SignedLog{0.0, 1};
  out.route = HypergeometricRoute::trivial;
  out.terms = 1;
  return out;
}

constexpr double kMaxCancellationDigits = 5.0;

}  // namespace

HypergeometricResult log_gauss_2f1_direct(double alpha, double beta, double gamma, double z, std::int64_t term_cap) {
  check_2f1_args(gamma, z);
  if (z == 0.0) return trivial_one();
  if (!(z > -1.0) && !is_nonpositive_integer(alpha) && !is_nonpositive_integer(beta))
    throw DomainError("2F1 direct series needs |z| < 1, got z = " + std::to_string(z));
  return hypergeometric_series(alpha, beta, gamma, z, 0.0, HypergeometricRoute::direct, term_cap);
}

HypergeometricResult log_gauss_2f1_pfaff(double alpha, double beta, double gamma, double z, std::int64_t term_cap) {
  check_2f1_args(gamma, z);
  if (z == 0.0) return trivial_one();
  const double w = z / (z - 1.0);
  const double log_prefactor = -alpha * std::log1p(-z);
  return hypergeometric_series(alpha, gamma - beta, gamma, w, log_prefactor, HypergeometricRoute::pfaff, term_cap);
}

HypergeometricResult log_gauss_2f1(double alpha, double beta, double gamma, double z, std::int64_t term_cap) {
  check_2f1_args(gamma, z);
  if (z == 0.0 || alpha == 0.0 || beta == 0.0) return trivial_one();

  // Pfaff on alpha sums 2F1(alpha, gamma-beta; gamma; w) with w in (0, 1); all
  // terms share a sign when both numerator parameters are positive.
  const bool pfaff_alpha_positive = alpha > 0.0 && gamma - beta > 0.0;
  const bool pfaff_beta_positive = beta > 0.0 && gamma - alpha > 0.0;
  if (pfaff_alpha_positive) return log_gauss_2f1_pfaff(alpha, beta, gamma, z, term_cap);
  if (pfaff_beta_positive) return log_gauss_2f1_pfaff(beta, alpha, gamma, z, term_cap);

  HypergeometricResult best;
  bool have = false;
  std::string last_error;
  auto consider = [&](auto&& evaluate) {
    try {
      HypergeometricResult r = evaluate();
      if (!have || r.cancellation_digits < best.cancellation_digits) {
        best = r;
        have = true;
      }
    } catch (const NumericError& e) {
      last_error = e.what();
    }
  };
  if (z > -1.0) consider([&] { return log_gauss_2f1_direct(alpha, beta, gamma, z, term_cap); });
  if (!have || best.cancellation_digits > kMaxCancellationDigits) {
    consider([&] { return log_gauss_2f1_pfaff(alpha, beta, gamma, z, term_cap); });
    consider([&] { return log_gauss_2f1_pfaff(beta, alpha, gamma, z, term_cap); });
  }
  if (!have) throw NumericError(last_error);
  if (best.cancellation_digits > kMaxCancellationDigits) {
    std::ostringstream msg;
    msg << "2F1(" << alpha << ", " << beta << "; " << gamma << "; " << z << ") loses "
        << best.cancellation_digits << " digits to cancellation";
    throw NumericError(msg.str());
  }
  return best;
}

}  // namespace rbvs
