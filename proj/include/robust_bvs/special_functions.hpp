#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace rbvs {

/// A real number stored as sign * exp(log_abs). Zero is log_abs = -inf.
struct SignedLog {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 1;

  double value() const { return sign * std::exp(log_abs); }
};

/// Sum of terms given in log form. Keeps a running scale equal to the largest
/// term seen so far, so neither overflow nor underflow occurs, and accumulates
/// the scaled terms with Neumaier compensation.
class LogSumAccumulator {
 public:
  void add(double log_abs, int sign = 1);
  void add(SignedLog term) { add(term.log_abs, term.sign); }
  SignedLog result() const;
  /// Largest log|term| added; used to measure cancellation.
  double peak() const noexcept { return scale_; }

 private:
  double scale_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Natural log of Gamma(x) for x > 0.
double log_gamma(double x);

/// log Gamma(s, x) = log of the integral of t^(s-1) e^-t over [x, inf).
double log_upper_incomplete_gamma(double s, double x);
/// log gamma(s, x) = log of the integral of t^(s-1) e^-t over [0, x].
double log_lower_incomplete_gamma(double s, double x);

/// Which expansion produced a 2F1 value.
enum class HypergeometricRoute {
  trivial,   // z == 0 or a terminating parameter at z == 0
  direct,    // power series in z
  pfaff,     // (1-z)^-a 2F1(a, c-b; c; z/(z-1))
};

struct HypergeometricResult {
  SignedLog value;
  HypergeometricRoute route = HypergeometricRoute::trivial;
  std::int64_t terms = 0;
  /// log10 of (largest term / |sum|); digits lost to cancellation.
  double cancellation_digits = 0.0;
};

/// Default cap on series terms for 2F1.
inline constexpr std::int64_t kHypergeometricTermCap = 1'000'000;

/// Gauss 2F1(alpha, beta; gamma; z) for z <= 0, returned as a signed log.
///
/// Picks a Pfaff transformation whose series has terms of one sign when one
/// exists, otherwise the direct series for |z| < 1, otherwise any Pfaff form.
/// Throws NumericError when no series converges within `term_cap` terms or when
/// cancellation destroys more than ~6 significant digits.
HypergeometricResult log_gauss_2f1(double alpha, double beta, double gamma, double z,
                                   std::int64_t term_cap = kHypergeometricTermCap);

/// The power series in z, for |z| < 1. Exposed so the transformations can be
/// checked against it.
HypergeometricResult log_gauss_2f1_direct(double alpha, double beta, double gamma, double z,
                                          std::int64_t term_cap = kHypergeometricTermCap);

/// Pfaff transformation applied to the first parameter:
/// (1-z)^-alpha 2F1(alpha, gamma-beta; gamma; z/(z-1)), z <= 0.
HypergeometricResult log_gauss_2f1_pfaff(double alpha, double beta, double gamma, double z,
                                         std::int64_t term_cap = kHypergeometricTermCap);

}  // namespace rbvs
