#pragma once

// Core value types shared by every module.
//
// Storage convention: samples are rows. The textbook formulation stores the
// design matrix as (d+1) x n with variables as rows; here `Dataset::x` is
// n x d and `design()` returns the n x (d+1) matrix [1 | x], i.e. the
// transpose of that formulation. Normal-equation formulas map over by
// replacing X X^T with A^T A where A = design().

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtlr/errors.hpp"

namespace mtlr {

struct Dataset {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd y;  // n
  bool has_intercept = true;

  std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(x.cols()); }
  /// Number of unknowns: d + 1 with an intercept, d otherwise.
  std::size_t columns() const { return d() + (has_intercept ? 1 : 0); }

  /// Throws DimensionMismatch or InvalidArgument when the invariants fail.
  void validate() const {
    if (x.cols() < 1 || x.rows() < 1)
      throw DimensionMismatch("dataset needs n >= 1 and d >= 1");
    if (y.size() != x.rows())
      throw DimensionMismatch("y has " + std::to_string(y.size()) + " entries, x has " +
                              std::to_string(x.rows()) + " rows");
    if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("dataset contains non-finite values");
  }

  Eigen::MatrixXd design() const {
    if (!has_intercept) return x;
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return a;
  }

  /// Rows are (x_1, ..., x_d, y).
  static Dataset from_rows(const std::vector<std::vector<double>>& rows, bool has_intercept = true) {
    if (rows.empty() || rows.front().size() < 2)
      throw DimensionMismatch("from_rows needs at least one row of width >= 2");
    const auto width = rows.front().size();
    Dataset ds;
    ds.has_intercept = has_intercept;
    ds.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
    ds.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != width) throw DimensionMismatch("ragged rows");
      for (std::size_t j = 0; j + 1 < width; ++j)
        ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      ds.y(static_cast<Eigen::Index>(i)) = rows[i].back();
    }
    ds.validate();
    return ds;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.has_intercept == b.has_intercept && a.x.rows() == b.x.rows() && a.x.cols() == b.x.cols() &&
           a.y.size() == b.y.size() && a.x == b.x && a.y == b.y;
  }
};

/// Fitted coefficients. beta(0) is the intercept when has_intercept is set.
/// `delta` carries the forward-error bound spread uniformly over the
/// components, so delta.norm() is the bound on ||beta - beta_exact||_2.
struct Estimator {
  Eigen::VectorXd beta;
  Eigen::VectorXd delta;
  bool has_intercept = true;

  std::size_t size() const { return static_cast<std::size_t>(beta.size()); }
  double delta_norm() const { return delta.size() ? delta.norm() : 0.0; }

  static Estimator exact(Eigen::VectorXd beta, bool has_intercept = true) {
    Estimator e;
    e.delta = Eigen::VectorXd::Zero(beta.size());
    e.beta = std::move(beta);
    e.has_intercept = has_intercept;
    return e;
  }

  static Estimator of(std::initializer_list<double> values, bool has_intercept = true) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) b(i++) = v;
    return exact(std::move(b), has_intercept);
  }

  /// Spread a norm bound uniformly: each component gets bound / sqrt(size).
  void set_delta_norm(double bound) {
    const auto m = beta.size();
    delta = Eigen::VectorXd::Constant(m, m ? bound / std::sqrt(static_cast<double>(m)) : 0.0);
  }
};

/// A data point to append: xstar excludes the implicit intercept entry.
struct NewPoint {
  Eigen::VectorXd xstar;
  double ystar = 0.0;
};

/// Append one sample to a dataset.
inline Dataset with_point(const Dataset& ds, const NewPoint& p) {
  if (static_cast<std::size_t>(p.xstar.size()) != ds.d())
    throw DimensionMismatch("new point has " + std::to_string(p.xstar.size()) + " coordinates, expected " +
                            std::to_string(ds.d()));
  Dataset out;
  out.has_intercept = ds.has_intercept;
  out.x.resize(ds.x.rows() + 1, ds.x.cols());
  out.x.topRows(ds.x.rows()) = ds.x;
  out.x.row(ds.x.rows()) = p.xstar.transpose();
  out.y.resize(ds.y.size() + 1);
  out.y.head(ds.y.size()) = ds.y;
  out.y(ds.y.size()) = p.ystar;
  return out;
}

/// Estimator component holding variable k (1-based, as in x_1..x_d).
inline Eigen::Index coef_index(std::size_t k, bool has_intercept) {
  return static_cast<Eigen::Index>(has_intercept ? k : k - 1);
}

}  // namespace mtlr
