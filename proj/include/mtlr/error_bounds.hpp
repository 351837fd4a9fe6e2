#pragma once

// Forward-error bound for a least-squares estimator.
//
// The bound is the classical first-order perturbation result for full-rank
// least squares: a normwise backward error c*u in the data induces
//
//   ||beta_hat - beta||_2 <= c*u * kappa_LS * ||beta_hat||_2,
//   kappa_LS = kappa + kappa^2 * ||r||_2 / (||A||_2 * ||beta_hat||_2),
//
// where kappa = sigma_max / sigma_min of the design matrix A and r is the
// residual. c defaults to 10 * (n + d + 1).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/SVD>

#include "mtlr/dataset.hpp"

namespace mtlr {

/// Unit roundoff of IEEE double.
inline constexpr double unit_roundoff = std::numeric_limits<double>::epsilon() / 2;

struct BoundConfig {
  /// Overrides c when set (config key error_bound.safety_factor).
  std::optional<double> safety_factor;

  double factor(std::size_t n, std::size_t d) const {
    return safety_factor ? *safety_factor : 10.0 * static_cast<double>(n + d + 1);
  }
};

struct ErrorBound {
  double kappa = 1.0;
  double backward = 0.0;
  double delta_norm = 0.0;
};

struct SingularRange {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

/// sigma_min below max(rows, cols) * eps * sigma_max counts as rank deficient.
inline double rank_tolerance(Eigen::Index rows, Eigen::Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * sigma_max;
}

/// Extreme singular values of `a`; throws RankDeficient under the rank tolerance.
inline SingularRange singular_range(const Eigen::MatrixXd& a) {
  if (a.rows() < a.cols())
    throw RankDeficient(std::to_string(a.rows()) + " rows cannot determine " + std::to_string(a.cols()) +
                        " coefficients");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  SingularRange out{s(0), s(s.size() - 1)};
  if (!(out.sigma_max > 0.0) || out.sigma_min < rank_tolerance(a.rows(), a.cols(), out.sigma_max))
    throw RankDeficient("smallest singular value " + std::to_string(out.sigma_min) + " below tolerance");
  return out;
}

/// 2-norm condition number of the design matrix (intercept column included).
inline double condition_number(const Dataset& ds) {
  ds.validate();
  const auto s = singular_range(ds.design());
  return s.sigma_max / s.sigma_min;
}

namespace detail {

/// The bound formula in isolation, for callers that already know the spectrum.
inline double first_order_bound(double backward, double kappa, double sigma_max, double sigma_min,
                                double beta_norm, double residual_norm, double y_norm) {
  if (beta_norm == 0.0) return backward * kappa * y_norm / sigma_min;
  const double kappa_ls = kappa + kappa * kappa * residual_norm / (sigma_max * beta_norm);
  return backward * kappa_ls * beta_norm;
}

}  // namespace detail

/// Forward bound for `est` computed on `ds`. `est` may come from any solver;
/// the residual is evaluated for the supplied coefficients.
inline ErrorBound forward_bound(const Dataset& ds, const Estimator& est, const BoundConfig& cfg = {}) {
  ds.validate();
  if (est.size() != ds.columns())
    throw DimensionMismatch("estimator has " + std::to_string(est.size()) + " coefficients, dataset needs " +
                            std::to_string(ds.columns()));
  const Eigen::MatrixXd a = ds.design();
  const auto s = singular_range(a);
  ErrorBound b;
  b.kappa = s.sigma_max / s.sigma_min;
  b.backward = cfg.factor(ds.n(), ds.d()) * unit_roundoff;
  const double r = (ds.y - a * est.beta).norm();
  b.delta_norm = detail::first_order_bound(b.backward, b.kappa, s.sigma_max, s.sigma_min, est.beta.norm(), r,
                                           ds.y.norm());
  return b;
}

}  // namespace mtlr
