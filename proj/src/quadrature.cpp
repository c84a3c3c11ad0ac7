#include "robust_bvs/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <string>

#include "robust_bvs/error.hpp"

namespace rbvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kUnderflow = std::numeric_limits<double>::min();

// Kronrod 21-point abscissae; odd indices (1, 3, ...) are the 10-point Gauss
// nodes.
constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452, 0.930157491355708226001207180059508,
    0.865063366688984510732096688423493, 0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784, 0.294392862701460198131126603103866,
    0.148874338981631210884826001129720, 0.0};
constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390, 0.054755896574351996031381300244580,
    0.075039674810919952767043140916190, 0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707, 0.142775938577060080797094273138717,
    0.147739104901338491374841515972068, 0.149445554002916905664936468389821};
constexpr double kWg[5] = {0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
                           0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
                           0.295524224714752870173892994651338};

// A piece of the real line mapped onto a finite parameter range.
struct Piece {
  enum class Kind { finite, upper_infinite, lower_infinite } kind = Kind::finite;
  double anchor = 0.0;  // lo for upper_infinite, hi for lower_infinite

  // Original variable and Jacobian dx/dt at parameter t.
  double x(double t) const {
    switch (kind) {
      case Kind::finite:
        return t;
      case Kind::upper_infinite:
        return anchor + t / (1.0 - t);
      case Kind::lower_infinite:
        return anchor - t / (1.0 - t);
    }
    return t;
  }
  double jacobian(double t) const {
    if (kind == Kind::finite) return 1.0;
    const double s = 1.0 - t;
    return 1.0 / (s * s);
  }
};

struct Interval {
  int piece = 0;
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
  double roundoff = 0.0;
};

struct ByError {
  bool operator()(const Interval& l, const Interval& r) const { return l.error < r.error; }
};

class Rescale {
 public:
  explicit Rescale(double new_shift) : shift(new_shift) {}
  double shift;
};

// Evaluates the mapped integrand; `g` returns the value at t of piece p.
template <class G>
Interval gauss_kronrod(const G& g, int piece, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double abs_half = std::abs(half);
  const double fc = g(piece, center);
  double resg = 0.0;
  double resk = fc * kWgk[10];
  double resabs = std::abs(resk);
  double fv1[10];
  double fv2[10];
  for (int j = 0; j < 5; ++j) {
    const int jtw = 2 * j + 1;
    const double absc = half * kXgk[jtw];
    const double f1 = g(piece, center - absc);
    const double f2 = g(piece, center + absc);
    fv1[jtw] = f1;
    fv2[jtw] = f2;
    resg += kWg[j] * (f1 + f2);
    resk += kWgk[jtw] * (f1 + f2);
    resabs += kWgk[jtw] * (std::abs(f1) + std::abs(f2));
  }
  for (int j = 0; j < 5; ++j) {
    const int jtwm1 = 2 * j;
    const double absc = half * kXgk[jtwm1];
    const double f1 = g(piece, center - absc);
    const double f2 = g(piece, center + absc);
    fv1[jtwm1] = f1;
    fv2[jtwm1] = f2;
    resk += kWgk[jtwm1] * (f1 + f2);
    resabs += kWgk[jtwm1] * (std::abs(f1) + std::abs(f2));
  }
  const double reskh = resk * 0.5;
  double resasc = kWgk[10] * std::abs(fc - reskh);
  for (int j = 0; j < 10; ++j) resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));

  Interval out;
  out.piece = piece;
  out.a = a;
  out.b = b;
  out.value = resk * half;
  resabs *= abs_half;
  resasc *= abs_half;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  out.roundoff = 50.0 * kEps * resabs;
  if (resabs > kUnderflow / (50.0 * kEps)) err = std::max(out.roundoff, err);
  out.error = err;
  return out;
}

std::vector<Piece> make_pieces(double lo, double hi, const std::vector<double>& breakpoints,
                               std::vector<std::vector<double>>& cuts) {
  std::vector<double> inner;
  for (double bp : breakpoints)
    if (std::isfinite(bp) && bp > lo && bp < hi) inner.push_back(bp);
  std::sort(inner.begin(), inner.end());
  inner.erase(std::unique(inner.begin(), inner.end()), inner.end());

  std::vector<Piece> pieces;
  cuts.clear();
  const bool lo_inf = std::isinf(lo);
  const bool hi_inf = std::isinf(hi);
  if (!lo_inf && !hi_inf) {
    pieces.push_back(Piece{});
    std::vector<double> c{lo};
    c.insert(c.end(), inner.begin(), inner.end());
    c.push_back(hi);
    cuts.push_back(std::move(c));
    return pieces;
  }
  // Finite middle section spanning all breakpoints, with mapped infinite tails
  // beyond the outermost ones.
  double left = lo_inf ? (inner.empty() ? (hi_inf ? 0.0 : hi) : inner.front()) : lo;
  double right = hi_inf ? (inner.empty() ? (lo_inf ? 0.0 : lo) : inner.back()) : hi;
  if (lo_inf && !hi_inf && inner.empty()) left = right = hi;
  if (hi_inf && !lo_inf && inner.empty()) left = right = lo;
  if (lo_inf) {
    pieces.push_back(Piece{Piece::Kind::lower_infinite, left});
    cuts.push_back({0.0, 1.0});
  }
  if (right > left) {
    pieces.push_back(Piece{});
    std::vector<double> c{left};
    for (double bp : inner)
      if (bp > left && bp < right) c.push_back(bp);
    c.push_back(right);
    cuts.push_back(std::move(c));
  }
  if (hi_inf) {
    pieces.push_back(Piece{Piece::Kind::upper_infinite, right});
    cuts.push_back({0.0, 1.0});
  }
  return pieces;
}

void check_options(double lo, double hi, const QuadratureOptions& opts) {
  if (!(opts.rel_tol > 1e-14 && opts.rel_tol < 1e-2))
    throw ConfigError("quadrature rel_tol must lie in (1e-14, 1e-2), got " + std::to_string(opts.rel_tol));
  if (std::isnan(lo) || std::isnan(hi) || !(lo <= hi))
    throw DomainError("quadrature interval must satisfy lo <= hi");
  if (opts.max_subdivisions < 1) throw ConfigError("quadrature max_subdivisions must be positive");
}

// Core adaptive loop over the mapped integrand g(piece, t).
template <class G>
QuadratureResult adaptive(const G& g, const std::vector<Piece>& pieces, const std::vector<std::vector<double>>& cuts,
                          const QuadratureOptions& opts, std::int64_t& evaluations) {
  std::priority_queue<Interval, std::vector<Interval>, ByError> heap;
  std::vector<Interval> frozen;  // too narrow to split further
  for (std::size_t p = 0; p < pieces.size(); ++p)
    for (std::size_t c = 0; c + 1 < cuts[p].size(); ++c)
      heap.push(gauss_kronrod(g, static_cast<int>(p), cuts[p][c], cuts[p][c + 1]));

  auto totals = [&](double& value, double& error, double& roundoff) {
    value = error = roundoff = 0.0;
    auto q = heap;
    while (!q.empty()) {
      value += q.top().value;
      error += q.top().error;
      roundoff += q.top().roundoff;
      q.pop();
    }
    for (const auto& iv : frozen) {
      value += iv.value;
      error += iv.error;
      roundoff += iv.roundoff;
    }
  };

  double value = 0.0;
  double error = 0.0;
  double roundoff = 0.0;
  totals(value, error, roundoff);
  int subdivisions = static_cast<int>(heap.size());
  while (!heap.empty()) {
    const double target = std::max(opts.abs_tol, opts.rel_tol * std::abs(value));
    if (error <= target) break;
    if (subdivisions >= opts.max_subdivisions) break;
    Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const double scale = std::max(std::abs(worst.a), std::abs(worst.b));
    if (!(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 100.0 * kEps * scale) {
      frozen.push_back(worst);
      continue;
    }
    const Interval left = gauss_kronrod(g, worst.piece, worst.a, mid);
    const Interval right = gauss_kronrod(g, worst.piece, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    roundoff += left.roundoff + right.roundoff - worst.roundoff;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
    // Resum periodically so the running totals do not drift.
    if (subdivisions % 64 == 0) totals(value, error, roundoff);
  }
  totals(value, error, roundoff);

  const double target = std::max(opts.abs_tol, opts.rel_tol * std::abs(value));
  if (error > target && error > 4.0 * roundoff) {
    Interval worst;
    worst.error = -1.0;
    auto q = heap;
    while (!q.empty()) {
      if (q.top().error > worst.error) worst = q.top();
      q.pop();
    }
    for (const auto& iv : frozen)
      if (iv.error > worst.error) worst = iv;
    const Piece& pc = pieces[static_cast<std::size_t>(worst.piece)];
    std::ostringstream msg;
    msg.precision(10);
    msg << "adaptive quadrature did not converge after " << subdivisions << " subdivisions: estimate " << value
        << ", error " << error << " (target " << target << "); worst subinterval [" << pc.x(worst.a) << ", "
        << pc.x(worst.b) << "] with error " << worst.error;
    throw NumericError(msg.str());
  }
  QuadratureResult out;
  out.value = value;
  out.abs_error_estimate = error;
  out.evaluations = evaluations;
  return out;
}

}  // namespace

QuadratureResult integrate(const Integrand& f, double lo, double hi, const QuadratureOptions& opts) {
  check_options(lo, hi, opts);
  if (lo == hi) return QuadratureResult{0.0, 0.0, 1, false};
  std::vector<std::vector<double>> cuts;
  const std::vector<Piece> pieces = make_pieces(lo, hi, opts.breakpoints, cuts);
  std::int64_t evaluations = 0;
  auto g = [&](int piece, double t) {
    const Piece& pc = pieces[static_cast<std::size_t>(piece)];
    ++evaluations;
    const double x = pc.x(t);
    const double fx = f(x);
    if (std::isnan(fx) || std::isinf(fx)) {
      std::ostringstream msg;
      msg << "integrand is not finite at x = " << x;
      throw NumericError(msg.str());
    }
    if (fx == 0.0) return 0.0;
    return fx * pc.jacobian(t);
  };
  QuadratureResult r = adaptive(g, pieces, cuts, opts, evaluations);
  r.evaluations = evaluations;
  return r;
}

QuadratureResult integrate_log(const Integrand& log_f, double lo, double hi, const QuadratureOptions& opts) {
  check_options(lo, hi, opts);
  if (lo == hi) return QuadratureResult{-kInf, 0.0, 1, true};
  std::vector<std::vector<double>> cuts;
  const std::vector<Piece> pieces = make_pieces(lo, hi, opts.breakpoints, cuts);

  std::int64_t evaluations = 0;
  auto log_g = [&](int piece, double t) {
    const Piece& pc = pieces[static_cast<std::size_t>(piece)];
    ++evaluations;
    const double x = pc.x(t);
    const double lf = log_f(x);
    if (std::isnan(lf) || lf == kInf) {
      std::ostringstream msg;
      msg << "log integrand is not finite at x = " << x;
      throw NumericError(msg.str());
    }
    if (lf == -kInf) return -kInf;
    return lf + std::log(pc.jacobian(t));
  };

  // Shift by the largest value seen on the initial nodes.
  double shift = -kInf;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    for (std::size_t c = 0; c + 1 < cuts[p].size(); ++c) {
      const double a = cuts[p][c];
      const double b = cuts[p][c + 1];
      const double center = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      shift = std::max(shift, log_g(static_cast<int>(p), center));
      for (double xk : kXgk) {
        if (xk == 0.0) continue;
        shift = std::max(shift, log_g(static_cast<int>(p), center - half * xk));
        shift = std::max(shift, log_g(static_cast<int>(p), center + half * xk));
      }
    }
  }
  if (shift == -kInf) shift = 0.0;

  constexpr double kHeadroom = 600.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      auto g = [&](int piece, double t) {
        const double lg = log_g(piece, t);
        if (lg - shift > kHeadroom) throw Rescale(lg);
        return lg == -kInf ? 0.0 : std::exp(lg - shift);
      };
      QuadratureResult r = adaptive(g, pieces, cuts, opts, evaluations);
      QuadratureResult out;
      out.log_scale = true;
      out.evaluations = evaluations;
      if (r.value <= 0.0) {
        out.value = -kInf;
        out.abs_error_estimate = kInf;
        return out;
      }
      out.value = std::log(r.value) + shift;
      out.abs_error_estimate = r.abs_error_estimate / r.value;
      return out;
    } catch (const Rescale& rs) {
      shift = rs.shift;
    }
  }
  throw NumericError("integrate_log: integrand scale kept growing during refinement");
}

}  // namespace rbvs
