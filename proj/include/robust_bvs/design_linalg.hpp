#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "robust_bvs/model_space.hpp"

namespace rbvs {

/// Response y (n), fixed design X0 (n x k0, possibly zero columns) and
/// candidate design X (n x p).
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x0;
  Eigen::MatrixXd x;
  std::vector<std::string> fixed_names;
  std::vector<std::string> candidate_names;

  int n() const { return static_cast<int>(y.size()); }
  int k0() const { return static_cast<int>(x0.cols()); }
  int p() const { return static_cast<int>(x.cols()); }

  /// Checks shapes, finiteness and n >= 1; fills missing names with x1, x2, ...
  void validate();
};

/// Per-model quantities that drive every Bayes factor.
struct ModelFit {
  ModelId model;
  int k = 0;
  double sse = 0.0;
  double q = 1.0;
  double log_bf = 0.0;
  double log_prior_odds = 0.0;
};

/// SSE values below this fraction of ||y||^2 are treated as an exact fit.
inline constexpr double kSaturatedSseFraction = 1e-12;

/// Per-dataset precomputation: the projection of y and X onto the orthogonal
/// complement of span(X0) is done once, and each model then needs only a QR of
/// its own residualized columns.
class DesignContext {
 public:
  /// Throws SingularDesignError if X0 is rank deficient.
  explicit DesignContext(Dataset dataset);

  const Dataset& dataset() const noexcept { return data_; }
  int n() const noexcept { return data_.n(); }
  int k0() const noexcept { return data_.k0(); }
  int p() const noexcept { return data_.p(); }

  /// V_i = (I - X0 (X0'X0)^-1 X0') X_i. With k0 = 0 this is X_i itself.
  Eigen::MatrixXd residual_design(ModelId m) const;

  /// Least-squares residual sum of squares of y on [X0 | X_i], via
  /// column-pivoted Householder QR. Values below the saturation floor are
  /// returned as exactly zero.
  /// Throws SingularDesignError (naming the columns) on rank deficiency and
  /// DataError when n < k0 + k_i.
  double fit_sse(ModelId m) const;

  double null_sse() const noexcept { return sse0_; }
  double y_norm2() const noexcept { return y_norm2_; }

  /// SSE, Q and k for one model; log_bf and log_prior_odds are left at zero.
  ModelFit fit(ModelId m) const;

 private:
  std::string column_list(ModelId m) const;

  Dataset data_;
  Eigen::VectorXd y_resid_;
  Eigen::MatrixXd x_resid_;
  double sse0_ = 0.0;
  double y_norm2_ = 0.0;
  double rank_threshold_ = 0.0;
};

/// Q_i0 = SSE_i / SSE_0, clamped into [0, 1]. Throws DataError if sse_0 is
/// not positive (degenerate null fit).
double q_ratio(double sse_i, double sse_0);

}  // namespace rbvs
