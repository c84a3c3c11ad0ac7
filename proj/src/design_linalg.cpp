#include "robust_bvs/design_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "robust_bvs/error.hpp"

namespace rbvs {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

void Dataset::validate() {
  const auto rows = y.size();
  if (rows < 1) throw DataError("dataset needs at least one observation");
  if (x0.cols() > 0 && x0.rows() != rows) throw DataError("fixed design has a different number of rows than y");
  if (x0.cols() == 0) x0.resize(rows, 0);
  if (x.cols() > 0 && x.rows() != rows) throw DataError("candidate design has a different number of rows than y");
  if (x.cols() == 0) x.resize(rows, 0);
  if (x.cols() > kMaxCandidates)
    throw ConfigError("at most " + std::to_string(kMaxCandidates) + " candidate covariates are supported, got " +
                      std::to_string(x.cols()));
  if (!y.allFinite() || !all_finite(x0) || !all_finite(x)) throw DataError("dataset contains non-finite values");
  for (Eigen::Index j = static_cast<Eigen::Index>(fixed_names.size()); j < x0.cols(); ++j)
    fixed_names.push_back("z" + std::to_string(j + 1));
  for (Eigen::Index j = static_cast<Eigen::Index>(candidate_names.size()); j < x.cols(); ++j)
    candidate_names.push_back("x" + std::to_string(j + 1));
  fixed_names.resize(static_cast<std::size_t>(x0.cols()));
  candidate_names.resize(static_cast<std::size_t>(x.cols()));
}

DesignContext::DesignContext(Dataset dataset) : data_(std::move(dataset)) {
  data_.validate();
  const Eigen::Index n = data_.y.size();
  double max_norm = 0.0;
  for (Eigen::Index j = 0; j < data_.x0.cols(); ++j) max_norm = std::max(max_norm, data_.x0.col(j).norm());
  for (Eigen::Index j = 0; j < data_.x.cols(); ++j) max_norm = std::max(max_norm, data_.x.col(j).norm());
  rank_threshold_ = static_cast<double>(n) * kEps * max_norm;

  y_norm2_ = data_.y.squaredNorm();
  if (data_.k0() == 0) {
    y_resid_ = data_.y;
    x_resid_ = data_.x;
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data_.x0);
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(std::min(n, data_.x0.cols()), data_.x0.cols());
    const Eigen::Index k0 = data_.x0.cols();
    bool full_rank = k0 <= n;
    for (Eigen::Index j = 0; full_rank && j < k0; ++j)
      if (!(std::abs(r(j, j)) > rank_threshold_)) full_rank = false;
    if (!full_rank) {
      std::string cols;
      for (const auto& name : data_.fixed_names) cols += (cols.empty() ? "" : ", ") + name;
      throw SingularDesignError("fixed design [" + cols + "] is rank deficient", cols);
    }
    // Project onto the orthogonal complement of span(X0): apply Q', zero the
    // first k0 coordinates, apply Q.
    const auto householder = qr.householderQ();
    Eigen::MatrixXd stacked(n, 1 + data_.x.cols());
    stacked.col(0) = data_.y;
    stacked.rightCols(data_.x.cols()) = data_.x;
    stacked.applyOnTheLeft(householder.adjoint());
    stacked.topRows(k0).setZero();
    stacked.applyOnTheLeft(householder);
    y_resid_ = stacked.col(0);
    x_resid_ = stacked.rightCols(data_.x.cols());
  }
  sse0_ = y_resid_.squaredNorm();
  if (sse0_ < kSaturatedSseFraction * y_norm2_) sse0_ = 0.0;
}

std::string DesignContext::column_list(ModelId m) const {
  std::string out;
  for (int j = 0; j < p(); ++j)
    if (m.contains(j)) out += (out.empty() ? "" : ", ") + data_.candidate_names[static_cast<std::size_t>(j)];
  return out;
}

Eigen::MatrixXd DesignContext::residual_design(ModelId m) const {
  check_model(m, p());
  Eigen::MatrixXd v(n(), model_dimension(m));
  Eigen::Index col = 0;
  for (int j = 0; j < p(); ++j)
    if (m.contains(j)) v.col(col++) = x_resid_.col(j);
  return v;
}

double DesignContext::fit_sse(ModelId m) const {
  check_model(m, p());
  const int k = model_dimension(m);
  if (n() < k0() + k)
    throw DataError("model {" + column_list(m) + "} needs n >= k0 + k = " + std::to_string(k0() + k) +
                    " observations, have " + std::to_string(n()));
  if (k == 0) return sse0_;
  const Eigen::MatrixXd v = residual_design(m);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  const Eigen::MatrixXd& packed = qr.matrixQR();
  std::string offending;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(std::abs(packed(j, j)) > rank_threshold_)) {
      // Columns pivoted past the numerical rank are the dependent ones.
      const Eigen::Index original = qr.colsPermutation().indices()(j);
      int seen = -1;
      for (int c = 0; c < p(); ++c) {
        if (!m.contains(c)) continue;
        if (++seen == original) {
          offending += (offending.empty() ? "" : ", ") + data_.candidate_names[static_cast<std::size_t>(c)];
          break;
        }
      }
    }
  }
  if (!offending.empty())
    throw SingularDesignError("design [X0 | " + column_list(m) + "] is rank deficient; dependent column(s): " +
                                  offending,
                              offending);
  Eigen::VectorXd rotated = y_resid_;
  rotated.applyOnTheLeft(qr.householderQ().adjoint());
  const double sse = rotated.tail(n() - k).squaredNorm();
  return sse < kSaturatedSseFraction * y_norm2_ ? 0.0 : sse;
}

ModelFit DesignContext::fit(ModelId m) const {
  ModelFit f;
  f.model = m;
  f.k = model_dimension(m);
  f.sse = fit_sse(m);
  f.q = q_ratio(f.sse, sse0_);
  return f;
}

double q_ratio(double sse_i, double sse_0) {
  if (!(sse_0 > 0.0))
    throw DataError("null model fits the response exactly (SSE0 = 0); Bayes factors are undefined");
  if (!(sse_i >= 0.0)) throw DomainError("SSE must be non-negative");
  return std::clamp(sse_i / sse_0, 0.0, 1.0);
}

}  // namespace rbvs
