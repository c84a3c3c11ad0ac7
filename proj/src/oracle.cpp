#include "robust_bvs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "robust_bvs/error.hpp"
#include "robust_bvs/posterior.hpp"
#include "robust_bvs/quadrature.hpp"

namespace rbvs::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogPi = std::log(std::numbers::pi);
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require(bool ok, const std::string& message) {
  if (!ok) throw DomainError(message);
}

// Breakpoints in t = log(1 + g - g_min) at a handful of g values where the
// integrands change shape.
std::vector<double> g_breakpoints(double g_min, std::initializer_list<double> gs) {
  std::vector<double> out;
  for (double g : gs) {
    if (!(g > g_min) || !std::isfinite(g)) continue;
    out.push_back(std::log1p(g - g_min));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Integral of exp(log_f(g)) over g in [g_min, inf) in the variable
// t = log(1 + g - g_min).
double integrate_over_g(const std::function<double(double)>& log_f, double g_min, std::vector<double> breaks,
                        double rel_tol) {
  QuadratureOptions opts;
  opts.rel_tol = rel_tol;
  opts.breakpoints = std::move(breaks);
  auto in_t = [&](double t) {
    const double g = g_min + std::expm1(t);
    if (!std::isfinite(g)) return -kInf;  // far tail, below any tolerance
    return log_f(g) + t;
  };
  return integrate_log(in_t, 0.0, kInf, opts).value;
}

// Mixing density written out directly (no support test: callers stay on it).
double log_pareto(double g, double a, double b, double scale) {
  return std::log(a) + a * std::log(scale) - (a + 1.0) * std::log(g + b);
}

double log_det_spd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("oracle: matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double log_bf_given_g(double g, int n, int k0, int ki, double q) {
  require(g >= 0.0, "log_bf_given_g needs g >= 0");
  require(q > 0.0 && q <= 1.0, "log_bf_given_g needs q in (0, 1]");
  require(k0 >= 0 && ki >= 0 && n >= k0 + ki + 1, "log_bf_given_g needs n >= k0 + k_i + 1");
  return 0.5 * (n - k0 - ki) * std::log1p(g) - 0.5 * (n - k0) * std::log1p(g * q);
}

double log_bf_quadrature(const MixingDensityParams& params, int k0, int ki, double q, double rel_tol) {
  check_mixing_params(params);
  if (ki == 0) return 0.0;
  const int n = params.n;
  log_bf_given_g(0.0, n, k0, ki, q);  // argument checks
  const double g_min = std::max(0.0, params.g_min());
  const double scale = params.scale();
  auto log_f = [&](double g) {
    return log_bf_given_g(g, n, k0, ki, q) + log_pareto(g, params.a, params.b, scale);
  };
  return integrate_over_g(log_f, g_min, g_breakpoints(g_min, {1.0, 10.0, double(n), 1.0 / q, n / q}), rel_tol);
}

double log_bf_sigma_known_quadrature(const MixingDensityParams& params, int ki, double s, double rel_tol) {
  check_mixing_params(params);
  require(s >= 0.0, "s must be non-negative");
  if (ki == 0) return 0.0;
  const double g_min = std::max(0.0, params.g_min());
  const double scale = params.scale();
  auto log_f = [&](double g) {
    return -0.5 * ki * std::log1p(g) + s * g / (g + 1.0) + log_pareto(g, params.a, params.b, scale);
  };
  return integrate_over_g(log_f, g_min, g_breakpoints(g_min, {1.0, s, 10.0 * s, 100.0}), rel_tol);
}

double log_bf_intrinsic(int n, int k0, int ki, double q, double rho, double c, double a, double rel_tol) {
  require(a > 0.0 && c >= 0.0 && rho * (c + 1.0) >= c, "invalid intrinsic mixing parameters");
  if (ki == 0) return 0.0;
  log_bf_given_g(0.0, n, k0, ki, q);
  const double lo = rho * (c + 1.0) - c;
  const double scale = rho * (c + 1.0);
  auto log_f = [&](double g_star) {
    return log_bf_given_g(n * g_star, n, k0, ki, q) + std::log(a) + a * std::log(scale) -
           (a + 1.0) * std::log(g_star + c);
  };
  return integrate_over_g(log_f, lo, g_breakpoints(lo, {1.0, 10.0, 1.0 / (n * q)}), rel_tol);
}

double log_null_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& x0) {
  const auto n = y.size();
  const auto k0 = x0.cols();
  require(n > k0, "null marginal needs n > k0");
  double log_det = 0.0;
  double sse = y.squaredNorm();
  if (k0 > 0) {
    require(x0.rows() == n, "x0 rows must match y");
    const Eigen::MatrixXd gram = x0.transpose() * x0;
    log_det = log_det_spd(gram);
    const Eigen::VectorXd coef = gram.ldlt().solve(x0.transpose() * y);
    sse = (y - x0 * coef).squaredNorm();
  }
  const double m = static_cast<double>(n - k0);
  return -std::log(2.0) - 0.5 * m * kLogPi - 0.5 * log_det + std::lgamma(0.5 * m) - 0.5 * m * std::log(sse);
}

namespace {

// Sigma_g = I + g M with M = V A V' = U diag(lambda) U'. Working in the
// eigenbasis keeps Sigma_g^-1 and |Sigma_g| accurate for any g.
struct GlsSetup {
  Eigen::VectorXd y_rot;
  Eigen::MatrixXd x0_rot;
  Eigen::VectorXd lambda;
};

GlsSetup gls_setup(const Eigen::VectorXd& y, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& v,
                   const Eigen::MatrixXd& prior_shape) {
  const auto n = y.size();
  require(v.rows() == n && prior_shape.rows() == v.cols() && prior_shape.cols() == v.cols(),
          "oracle marginal: shape mismatch");
  require(x0.cols() == 0 || x0.rows() == n, "oracle marginal: x0 rows must match y");
  require(n > x0.cols(), "marginal needs n > k0");
  const Eigen::MatrixXd m = v * prior_shape * v.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) throw NumericError("oracle: eigen-decomposition failed");
  GlsSetup out;
  out.lambda = eig.eigenvalues();
  const double top = std::max(out.lambda.maxCoeff(), 0.0);
  for (auto& l : out.lambda)
    if (l < 1e-12 * top) l = 0.0;
  out.y_rot = eig.eigenvectors().transpose() * y;
  out.x0_rot = x0.cols() > 0 ? Eigen::MatrixXd(eig.eigenvectors().transpose() * x0) : Eigen::MatrixXd(n, 0);
  return out;
}

double gls_log_marginal(const GlsSetup& s, double g) {
  const auto n = s.y_rot.size();
  const auto k0 = s.x0_rot.cols();
  Eigen::VectorXd root_w(n);  // Sigma_g^-1/2 in the eigenbasis
  double log_det_sigma = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = 1.0 + g * s.lambda(i);
    log_det_sigma += std::log(d);
    root_w(i) = 1.0 / std::sqrt(d);
  }
  // Weighted least squares by QR: the weights can span many orders of
  // magnitude for large g, which squaring into a gram would lose.
  Eigen::VectorXd resid = root_w.asDiagonal() * s.y_rot;
  double log_det_gls = 0.0;
  if (k0 > 0) {
    const Eigen::MatrixXd a = root_w.asDiagonal() * s.x0_rot;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::VectorXd r_diag = qr.matrixR().diagonal().head(k0);
    for (Eigen::Index i = 0; i < k0; ++i) {
      if (!(std::abs(r_diag(i)) > 0.0)) throw NumericError("oracle: GLS design is singular");
      log_det_gls += 2.0 * std::log(std::abs(r_diag(i)));
    }
    resid -= a * qr.solve(resid);
  }
  const double quad = resid.squaredNorm();
  const double m = static_cast<double>(n - k0);
  return -std::log(2.0) - 0.5 * m * kLogPi - 0.5 * log_det_sigma - 0.5 * log_det_gls + std::lgamma(0.5 * m) -
         0.5 * m * std::log(quad);
}

}  // namespace

double log_marginal_given_g(const Eigen::VectorXd& y, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& v,
                            const Eigen::MatrixXd& prior_shape, double g) {
  require(g >= 0.0, "g must be non-negative");
  return gls_log_marginal(gls_setup(y, x0, v, prior_shape), g);
}

double log_marginal_mixture(const Eigen::VectorXd& y, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& v,
                            const Eigen::MatrixXd& prior_shape, const MixingDensityParams& params, double rel_tol) {
  check_mixing_params(params);
  const GlsSetup setup = gls_setup(y, x0, v, prior_shape);
  const double g_min = std::max(0.0, params.g_min());
  const double scale = params.scale();
  auto log_f = [&](double g) { return gls_log_marginal(setup, g) + log_pareto(g, params.a, params.b, scale); };
  return integrate_over_g(log_f, g_min, g_breakpoints(g_min, {1.0, 10.0, 100.0}), rel_tol);
}

double log_marginal_direct(const Dataset& data, ModelId m, double g, double rel_tol) {
  Dataset d = data;
  d.validate();
  require(d.k0() == 1, "log_marginal_direct needs exactly one fixed column");
  const int k = model_dimension(m);
  require(k <= 1, "log_marginal_direct handles at most one candidate");
  check_model(m, d.p());
  const int n = d.n();
  require(n >= 1 + k + 1, "log_marginal_direct needs n >= k0 + k_i + 1");
  require(g > 0.0 || k == 0, "log_marginal_direct needs g > 0");

  Eigen::MatrixXd x(n, 1 + k);
  x.col(0) = d.x0.col(0);
  double prior_precision = 0.0;  // v'v / g, per sigma^2
  if (k == 1) {
    const int j = std::countr_zero(m.mask);
    x.col(1) = d.x.col(j);
    const Eigen::VectorXd& z = d.x0.col(0);
    const Eigen::VectorXd v = x.col(1) - z * (z.dot(x.col(1)) / z.squaredNorm());
    prior_precision = v.squaredNorm() / g;
  }
  // Least-squares centre and scale so every inner integrand has unit width
  // in the substituted variables beta = beta_hat + sigma L^-T t.
  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::VectorXd beta_hat = gram.ldlt().solve(x.transpose() * d.y);
  const Eigen::LLT<Eigen::MatrixXd> chol(gram);
  const Eigen::MatrixXd l_inv_t = chol.matrixU().solve(Eigen::MatrixXd::Identity(1 + k, 1 + k));
  const double log_det_jac = -chol.matrixLLT().diagonal().array().log().sum();

  // Each level integrates values carrying the error of the level below, so
  // tolerances tighten inward.
  QuadratureOptions middle;
  middle.rel_tol = std::max(rel_tol * 1e-2, 1e-12);
  middle.breakpoints = {0.0};
  QuadratureOptions inner = middle;
  inner.rel_tol = std::max(rel_tol * 1e-4, 2e-14);
  QuadratureOptions outer;
  outer.rel_tol = rel_tol;

  // log of likelihood x prior at (beta, sigma), times d sigma / sigma from the
  // right-Haar prior absorbed by integrating in log sigma.
  // With beta = beta_hat + sigma L^-T t the residual sum of squares is
  // SSE + sigma^2 |t|^2 exactly; forming y - X beta directly loses it to
  // cancellation once sigma is small. The SSE part is added outside.
  const double sse = (d.y - x * beta_hat).squaredNorm();
  // L^-T is upper triangular, so beta_1/sigma depends on t_1 alone; keeping
  // the t_1 terms out of the t_0 integrand stops them swamping -t_0^2/2.
  auto log_outer_terms = [&](double t1, double log_sigma) {
    double value = -0.5 * n * (kLog2Pi + 2.0 * log_sigma) - 0.5 * t1 * t1;
    if (k == 1) {
      const double ratio = beta_hat(1) / std::exp(log_sigma) + l_inv_t(1, 1) * t1;  // beta_1 / sigma
      value += -0.5 * (kLog2Pi + 2.0 * log_sigma) + 0.5 * std::log(prior_precision) -
               0.5 * prior_precision * ratio * ratio;
    }
    return value;
  };

  auto over_coefficients = [&](double log_sigma) {
    if (log_sigma > 700.0) return -kInf;  // decays at least like 1/sigma
    const double jac = (1 + k) * log_sigma + log_det_jac - sse / (2.0 * std::exp(2.0 * log_sigma));
    auto over_t0 = [&](const QuadratureOptions& opts) {
      return integrate_log([](double t0) { return -0.5 * t0 * t0; }, -kInf, kInf, opts).value;
    };
    if (k == 0) return over_t0(middle) + log_outer_terms(0.0, log_sigma) + jac;
    const double inner_value = over_t0(inner);
    auto f1 = [&](double t1) { return inner_value + log_outer_terms(t1, log_sigma); };
    return integrate_log(f1, -kInf, kInf, middle).value + jac;
  };

  if (!(sse > 0.0)) throw DomainError("log_marginal_direct needs a positive residual sum of squares");
  const double centre = 0.5 * std::log(sse / std::max(1, n - 1 - k));
  outer.breakpoints = {centre - 2.0, centre, centre + 2.0};
  // Below SSE/(2 sigma^2) = 2000 the integrand is under exp(-2000) of its
  // peak; the polynomial factors in sigma cannot make that up.
  const double lower = 0.5 * std::log(sse / 4000.0);
  return integrate_log(over_coefficients, lower, kInf, outer).value;
}

namespace {

ConsistencyRow run_replicate(const ConsistencyConfig& config, std::size_t grid_index, int replicate) {
  const int n = config.n_grid[grid_index];
  // Hash (seed, n index, replicate) so that nearby seeds share no streams.
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(grid_index), static_cast<std::uint32_t>(replicate)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  Rng rng((static_cast<std::uint64_t>(words[0]) << 32) | words[1]);
  Dataset data;
  data.x0 = Eigen::MatrixXd::Ones(n, 1);
  data.x.resize(n, config.p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < config.p; ++j) data.x(i, j) = rng.normal();
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    double mean = config.intercept;
    std::size_t c = 0;
    for (int j = 0; j < config.p; ++j)
      if (config.true_model.contains(j)) mean += config.coefficients[c++] * data.x(i, j);
    data.y(i) = mean + config.sigma * rng.normal();
  }
  const DesignContext ctx(std::move(data));
  std::vector<ModelEvidence> evidence;
  for (ModelId m : enumerate_models(config.p, std::nullopt)) {
    ModelFit fit = ctx.fit(m);
    const BayesFactor bf = log_bf_for_fit(config.hp, ctx, fit);
    evidence.push_back({m, bf.log_value, scott_berger_log_prior_odds(m, config.p)});
  }
  const PosteriorSummary summary = posterior_model_probs(evidence, config.p);
  ConsistencyRow row;
  row.n = n;
  row.replicate = replicate;
  row.true_model = config.true_model;
  row.hpm = summary.hpm;
  for (const auto& mp : summary.model_probs)
    if (mp.model == config.true_model) row.posterior_prob = mp.probability;
  return row;
}

}  // namespace

std::vector<ConsistencyRow> consistency_simulator(const ConsistencyConfig& config) {
  if (config.p < 1 || config.p > 20) throw ConfigError("consistency simulation needs 1 <= p <= 20");
  check_model(config.true_model, config.p);
  if (config.coefficients.size() != static_cast<std::size_t>(model_dimension(config.true_model)))
    throw ConfigError("need one coefficient per covariate of the true model");
  if (config.sigma < 0.0) throw ConfigError("sigma must be non-negative");
  if (config.replicates < 1) throw ConfigError("need at least one replicate");
  for (int n : config.n_grid)
    if (n < config.p + 2) throw ConfigError("every n in the grid must be at least p + 2");

  const std::size_t per_n = static_cast<std::size_t>(config.replicates);
  const std::size_t total = config.n_grid.size() * per_n;
  std::vector<ConsistencyRow> rows(total);
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(total)));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  auto work = [&](int worker) {
    try {
      for (std::size_t idx = static_cast<std::size_t>(worker); idx < total; idx += static_cast<std::size_t>(threads))
        rows[idx] = run_replicate(config, idx / per_n, static_cast<int>(idx % per_n));
    } catch (...) {
      errors[static_cast<std::size_t>(worker)] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

void write_consistency_tsv(std::ostream& out, const std::vector<ConsistencyRow>& rows) {
  out << "n\treplicate\tmodel_mask\tposterior_prob\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.posterior_prob);
    out << r.n << '\t' << r.replicate << '\t' << r.true_model.mask << '\t' << buf << '\n';
  }
}

}  // namespace rbvs::oracle
