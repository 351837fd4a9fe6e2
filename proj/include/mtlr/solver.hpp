#pragma once

// Reference ordinary-least-squares solver.
//
// The solve runs as a fixed pipeline of named stages:
//
//   assemble -> factorize (Householder QR) -> rank_check -> back_substitute -> output
//
// Every stage accepts a `Fault` selector so the mutant zoo can seed a
// behavioral defect at a precise point. `Fault::none` is the reference path.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mtlr/dataset.hpp"
#include "mtlr/error_bounds.hpp"

namespace mtlr {

/// Seeded defects, one per catalog entry in zoo.hpp.
enum class Fault {
  none,
  // assemble
  drop_intercept,
  intercept_doubled,
  response_negated,
  response_offset,
  column_shift,
  row_overrun,
  column_order,
  design_block_transposed,
  skip_odd_rows,
  response_truncated,
  intercept_guard_or,
  intercept_flag_negated,
  // factorize
  skip_positive_pivot,
  reflector_starts_late,
  early_break,
  infinite_loop,
  single_precision,
  norm_doubled,
  reflector_half_weight,
  guard_and_odd,
  apply_skips_last_row,
  zero_test_negated,
  column_stride_two,
  row_stride_two,
  norm_init_one,
  dot_init_one,
  reflector_plus,
  // rank_check
  skip_rank_check,
  rank_check_reversed,
  // back_substitute
  diag_misplaced,
  backsub_transposed,
  backsub_drops_last,
  backsub_plus,
  zero_divisor,
  rhs_plus_one,
  // output
  noop,
  coef_swap,
  integer_output,
  return_zero,
  return_empty,
  return_negated,
  intercept_minus_one,
};

/// Wall-clock limit checked inside long-running loops.
struct Deadline {
  std::chrono::steady_clock::time_point at = std::chrono::steady_clock::time_point::max();

  static Deadline after(std::chrono::nanoseconds budget) {
    return Deadline{std::chrono::steady_clock::now() + budget};
  }
  bool expired() const { return std::chrono::steady_clock::now() >= at; }
};

namespace detail {

class SolverPipeline {
 public:
  SolverPipeline(const Dataset& ds, Fault fault, const Deadline& deadline)
      : ds_(ds), fault_(fault), deadline_(deadline) {}

  std::vector<double> run() {
    assemble();
    factorize();
    check_rank();
    back_substitute();
    return output();
  }

  /// Upper-triangular factor of the reference design matrix (no faults).
  static Eigen::MatrixXd triangular_factor(const Dataset& ds) {
    SolverPipeline p(ds, Fault::none, Deadline{});
    p.assemble();
    p.factorize();
    p.check_rank();
    return p.r_;
  }

 private:
  bool is(Fault f) const { return fault_ == f; }

  void assemble() {
    ds_.validate();
    const Eigen::Index n = ds_.x.rows();
    const Eigen::Index d = ds_.x.cols();
    bool intercept = is(Fault::intercept_flag_negated) ? !ds_.has_intercept : ds_.has_intercept;
    dropped_intercept_ = intercept && is(Fault::drop_intercept);
    if (dropped_intercept_) intercept = false;
    const Eigen::Index off = intercept ? 1 : 0;
    m_ = d + off;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    if (is(Fault::column_order)) {
      // Columns canonicalized by mean; coefficients are never mapped back.
      const Eigen::VectorXd means = ds_.x.colwise().mean();
      std::stable_sort(order.begin(), order.end(),
                       [&](Eigen::Index l, Eigen::Index r) { return means(l) < means(r); });
    }

    a_ = Eigen::MatrixXd::Zero(n, m_);
    qtb_ = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is(Fault::skip_odd_rows) && i % 2 == 1) continue;
      if (off) {
        double one = 1.0;
        if (is(Fault::intercept_doubled)) one = 2.0;
        if (is(Fault::intercept_guard_or) && !(i < n / 2 || !ds_.has_intercept)) one = 0.0;
        a_(i, 0) = one;
      }
      Eigen::Index row = i;
      if (is(Fault::row_overrun) && i == n - 1) row = checked_row(i + 1);
      for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::Index col = order[static_cast<std::size_t>(j)];
        if (is(Fault::column_shift)) col = (j + 1) % d;
        a_(i, off + j) = ds_.x(row, col);
      }
      double yi = is(Fault::response_offset) ? ds_.y((i + 1) % n) : ds_.y(i);
      if (is(Fault::response_negated)) yi = -yi;
      if (is(Fault::response_truncated)) yi = std::trunc(yi);
      qtb_(i) = yi;
    }
    if (is(Fault::design_block_transposed)) {
      const Eigen::Index top = std::min(n, m_);
      for (Eigen::Index i = 0; i < top; ++i)
        for (Eigen::Index j = i + 1; j < top; ++j) std::swap(a_(i, j), a_(j, i));
    }
  }

  Eigen::Index checked_row(Eigen::Index i) const {
    if (i >= ds_.x.rows())
      throw std::out_of_range("row " + std::to_string(i) + " out of range for " + std::to_string(ds_.x.rows()) +
                              " samples");
    return i;
  }

  void factorize() {
    const Eigen::Index n = a_.rows();
    if (n < m_)
      throw RankDeficient(std::to_string(n) + " samples cannot determine " + std::to_string(m_) + " coefficients");
    const Deadline fallback = Deadline::after(std::chrono::seconds(1));
    const Deadline& limit = deadline_.at == Deadline{}.at ? fallback : deadline_;
    const Eigen::Index row_step = is(Fault::row_stride_two) ? 2 : 1;

    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < m_;) {
      if (is(Fault::infinite_loop) && limit.expired()) throw DeadlineExpired("factorization did not terminate");
      if (is(Fault::early_break) && k == m_ - 1) break;

      double ss = is(Fault::norm_init_one) ? 1.0 : 0.0;
      for (Eigen::Index i = is(Fault::reflector_starts_late) ? k + 1 : k; i < n; ++i) ss += a_(i, k) * a_(i, k);
      if (is(Fault::norm_doubled)) ss *= 2.0;
      const double norm = std::sqrt(ss);

      bool skip = norm == 0.0;
      if (is(Fault::zero_test_negated)) skip = !(norm == 0.0);
      if (is(Fault::skip_positive_pivot) && a_(k, k) > 0.0) skip = true;
      if (is(Fault::guard_and_odd)) skip = !(norm > 0.0 && k % 2 == 0);

      if (!skip) reflect(k, norm, v, row_step);
      if (is(Fault::single_precision)) {
        a_ = a_.cast<float>().cast<double>();
        qtb_ = qtb_.cast<float>().cast<double>();
      }
      if (is(Fault::infinite_loop)) continue;
      k += is(Fault::column_stride_two) ? 2 : 1;
    }
    r_ = a_.topRows(m_).triangularView<Eigen::Upper>();
  }

  // Householder reflector H = I - tau v v^T zeroing column k below the diagonal.
  void reflect(Eigen::Index k, double norm, Eigen::VectorXd& v, Eigen::Index row_step) {
    const Eigen::Index n = a_.rows();
    const double alpha = a_(k, k) > 0.0 ? -norm : norm;
    v(k) = a_(k, k) - alpha;
    for (Eigen::Index i = k + 1; i < n; ++i) v(i) = a_(i, k);
    double vtv = 0.0;
    for (Eigen::Index i = k; i < n; ++i) vtv += v(i) * v(i);
    const double tau = (is(Fault::reflector_half_weight) ? 1.0 : 2.0) / vtv;

    for (Eigen::Index j = k + 1; j < m_; ++j) {
      double s = 0.0;
      for (Eigen::Index i = k; i < n; i += row_step) s += v(i) * a_(i, j);
      for (Eigen::Index i = k; i < n; i += row_step) {
        if (is(Fault::reflector_plus))
          a_(i, j) += tau * s * v(i);
        else
          a_(i, j) -= tau * s * v(i);
      }
    }
    double s = is(Fault::dot_init_one) ? 1.0 : 0.0;
    for (Eigen::Index i = k; i < n; ++i) s += v(i) * qtb_(i);
    const Eigen::Index last = is(Fault::apply_skips_last_row) ? n - 1 : n;
    for (Eigen::Index i = k; i < last; ++i) qtb_(i) -= tau * s * v(i);

    a_(k, k) = alpha;
    for (Eigen::Index i = k + 1; i < n; ++i) a_(i, k) = 0.0;
  }

  void check_rank() {
    if (is(Fault::skip_rank_check) || !r_.allFinite()) return;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r_);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    const double tol = rank_tolerance(a_.rows(), m_, smax);
    const bool deficient = is(Fault::rank_check_reversed) ? smin > tol : (!(smax > 0.0) || smin < tol);
    if (deficient) throw RankDeficient("smallest singular value " + std::to_string(smin) + " below tolerance");
  }

  void back_substitute() {
    beta_ = Eigen::VectorXd::Zero(m_);
    const Eigen::Index end = is(Fault::backsub_drops_last) ? m_ - 1 : m_;
    for (Eigen::Index k = m_ - 1; k >= 0; --k) {
      double s = qtb_(k);
      if (is(Fault::rhs_plus_one)) s += 1.0;
      for (Eigen::Index j = k + 1; j < end; ++j) {
        const double term = (is(Fault::backsub_transposed) ? r_(j, k) : r_(k, j)) * beta_(j);
        s = is(Fault::backsub_plus) ? s + term : s - term;
      }
      double diag = r_(k, k);
      if (is(Fault::diag_misplaced)) diag = r_((k + 1) % m_, (k + 1) % m_);
      if (is(Fault::zero_divisor)) diag = r_(k, k) - r_(k, k);
      beta_(k) = s / diag;
    }
  }

  std::vector<double> output() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m_) + 1);
    if (dropped_intercept_) out.push_back(0.0);
    for (Eigen::Index j = 0; j < m_; ++j) out.push_back(beta_(j));

    if (is(Fault::noop) && false && !out.empty()) out.front() = 0.0;
    if (is(Fault::coef_swap) && out.size() >= 2) std::swap(out[0], out[1]);
    if (is(Fault::integer_output))
      for (double& v : out) v = std::trunc(v);
    if (is(Fault::return_zero)) std::fill(out.begin(), out.end(), 0.0);
    if (is(Fault::return_empty)) out.clear();
    if (is(Fault::return_negated))
      for (double& v : out) v = -v;
    if (is(Fault::intercept_minus_one) && !out.empty()) out.front() -= 1.0;
    return out;
  }

  const Dataset& ds_;
  Fault fault_;
  Deadline deadline_;
  Eigen::Index m_ = 0;
  bool dropped_intercept_ = false;
  Eigen::MatrixXd a_;
  Eigen::VectorXd qtb_;
  Eigen::MatrixXd r_;
  Eigen::VectorXd beta_;
};

}  // namespace detail

/// Raw coefficient vector from the pipeline, with `fault` injected.
/// Faulty variants may return any length or non-finite values, or throw.
inline std::vector<double> solve_coefficients(const Dataset& ds, Fault fault = Fault::none,
                                              const Deadline& deadline = {}) {
  return detail::SolverPipeline(ds, fault, deadline).run();
}

/// Least-squares estimator with its forward-error bound attached.
inline Estimator fit(const Dataset& ds, const BoundConfig& cfg = {}) {
  const auto coefs = solve_coefficients(ds);
  Estimator est;
  est.has_intercept = ds.has_intercept;
  est.beta = Eigen::Map<const Eigen::VectorXd>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
  est.set_delta_norm(forward_bound(ds, est, cfg).delta_norm);
  return est;
}

/// beta_0 + sum_j x_j beta_j, or sum_j x_j beta_j without an intercept.
inline double predict(const Estimator& est, const Eigen::VectorXd& xrow) {
  const auto off = est.has_intercept ? 1 : 0;
  if (est.beta.size() != xrow.size() + off)
    throw DimensionMismatch("estimator has " + std::to_string(est.beta.size()) + " coefficients for " +
                            std::to_string(xrow.size()) + " variables");
  double acc = est.has_intercept ? est.beta(0) : 0.0;
  for (Eigen::Index j = 0; j < xrow.size(); ++j) acc += xrow(j) * est.beta(j + off);
  return acc;
}

/// Sherman-Morrison update of `est = fit(ds)` after appending `p`:
///   beta* = beta + G (y* - x*^T beta),  G = (A^T A)^{-1} x* / (1 + x*^T (A^T A)^{-1} x*).
/// (A^T A)^{-1} x* comes from two triangular solves with the QR factor R.
inline Estimator rank1_update(const Dataset& ds, const Estimator& est, const NewPoint& p,
                              const BoundConfig& cfg = {}) {
  if (est.size() != ds.columns()) throw DimensionMismatch("estimator does not match dataset");
  if (static_cast<std::size_t>(p.xstar.size()) != ds.d()) throw DimensionMismatch("new point dimension");
  const Eigen::MatrixXd r = detail::SolverPipeline::triangular_factor(ds);

  Eigen::VectorXd xs(static_cast<Eigen::Index>(ds.columns()));
  if (ds.has_intercept) {
    xs(0) = 1.0;
    xs.tail(p.xstar.size()) = p.xstar;
  } else {
    xs = p.xstar;
  }
  Eigen::VectorXd w = r.triangularView<Eigen::Upper>().transpose().solve(xs);
  w = r.triangularView<Eigen::Upper>().solve(w);
  const double denom = 1.0 + xs.dot(w);
  const double innovation = p.ystar - xs.dot(est.beta);

  Estimator out;
  out.has_intercept = ds.has_intercept;
  out.beta = est.beta + (w / denom) * innovation;
  out.set_delta_norm(forward_bound(with_point(ds, p), out, cfg).delta_norm);
  return out;
}

}  // namespace mtlr
