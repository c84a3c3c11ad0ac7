#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace rbvs {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int max_subdivisions = 4000;
  /// Interior points (in the original variable) where the integrand changes
  /// character. Points outside the interval are ignored.
  std::vector<double> breakpoints;
};

struct QuadratureResult {
  /// The integral, or its natural log for integrate_log.
  double value = 0.0;
  /// Absolute error of `value`. For log-scale results this is the absolute
  /// error in the log, i.e. approximately the relative error of the integral.
  double abs_error_estimate = 0.0;
  std::int64_t evaluations = 0;
  bool log_scale = false;
};

/// Integrand callbacks must be free of side effects; the integrator may call
/// them in any order.
using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (10/21-point) integration of f over [lo, hi].
/// Either end may be infinite; infinite ends are mapped onto a finite range by
/// x = lo + t/(1-t) (and its mirror image). rel_tol must lie in (1e-14, 1e-2).
///
/// Throws NumericError if the subdivision limit is reached before the error
/// estimate meets max(abs_tol, rel_tol*|value|); the message reports the worst
/// subinterval.
QuadratureResult integrate(const Integrand& f, double lo, double hi, const QuadratureOptions& opts = {});

/// Integrates exp(log_f) over [lo, hi] and returns the log of the integral.
/// log_f may return -inf where the integrand vanishes. The integrand is shifted
/// by its largest sampled value before exponentiation, so integrals far
/// outside the double range are fine.
QuadratureResult integrate_log(const Integrand& log_f, double lo, double hi, const QuadratureOptions& opts = {});

}  // namespace rbvs
