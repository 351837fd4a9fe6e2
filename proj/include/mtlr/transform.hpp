#pragma once

// Dataset transforms and the analytic effect each one has on the
// least-squares estimator.
//
//   scale   y <- a y, x_k <- b x_k          beta_k <- (a/b) beta_k, others <- a beta_j
//   shift   y <- y + a, x_k <- x_k + b      beta_0 <- beta_0 - b beta_k + a   (intercept form)
//   permute x_k <- x_sigma(k), rows by pi   beta_k <- beta_sigma(k)
//   rotate  (x_p, x_q) by theta             (beta_p, beta_q) rotated by theta
//
// Variable indices are 1-based (x_1..x_d) throughout.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "mtlr/dataset.hpp"

namespace mtlr {

namespace transforms {

/// Append (xstar, ystar). ystar is resolved from the source output for MR1.1.
struct InsertPoint {
  Eigen::VectorXd xstar;
  std::optional<double> ystar;
};
/// Append the componentwise mean row.
struct InsertCentroid {};
/// k is ignored when b == 1.
struct Scale {
  double a = 1.0;
  double b = 1.0;
  std::size_t k = 0;
};
/// k is ignored when b == 0.
struct Shift {
  double a = 0.0;
  double b = 0.0;
  std::size_t k = 0;
};
/// Follow-up row i is source row order[i] (0-based).
struct PermuteSamples {
  std::vector<std::size_t> order;
};
/// Follow-up column k is source column order[k] (0-based over x columns).
struct PermuteVariables {
  std::vector<std::size_t> order;
};
struct SwapVariables {
  std::size_t p = 1;
  std::size_t q = 2;
};
/// Counter-clockwise rotation of the (x_p, x_q) plane.
struct Rotate {
  std::size_t p = 1;
  std::size_t q = 2;
  double theta = 0.0;
};

}  // namespace transforms

using TransformSpec = std::variant<transforms::InsertPoint, transforms::InsertCentroid, transforms::Scale,
                                   transforms::Shift, transforms::PermuteSamples, transforms::PermuteVariables,
                                   transforms::SwapVariables, transforms::Rotate>;

namespace detail {

inline void check_variable(std::size_t k, std::size_t d, const char* what) {
  if (k < 1 || k > d)
    throw IndexOutOfRange(std::string(what) + " = " + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
}

inline void check_pair(std::size_t p, std::size_t q, std::size_t d) {
  check_variable(p, d, "p");
  check_variable(q, d, "q");
  if (p == q) throw InvalidArgument("p and q must differ");
}

inline void check_bijection(const std::vector<std::size_t>& order, std::size_t size, const char* what) {
  if (order.size() != size)
    throw DimensionMismatch(std::string(what) + " has " + std::to_string(order.size()) + " entries, expected " +
                            std::to_string(size));
  std::vector<bool> seen(size, false);
  for (auto v : order) {
    if (v >= size || seen[v]) throw InvalidArgument(std::string(what) + " is not a bijection");
    seen[v] = true;
  }
}

// Largest singular value of I + b e_0 e_k^T.
inline double shift_gain(double b) { return (std::abs(b) + std::sqrt(b * b + 4.0)) / 2.0; }

template <class>
inline constexpr bool always_false = false;

}  // namespace detail

/// The follow-up dataset produced by applying `spec` to `ds`.
inline Dataset apply_transform(const Dataset& ds, const TransformSpec& spec) {
  using namespace transforms;
  ds.validate();
  const std::size_t d = ds.d();
  return std::visit(
      [&](const auto& t) -> Dataset {
        using T = std::decay_t<decltype(t)>;
        Dataset out = ds;
        if constexpr (std::is_same_v<T, InsertPoint>) {
          if (!t.ystar) throw InvalidArgument("insert_point needs a resolved y*");
          return with_point(ds, NewPoint{t.xstar, *t.ystar});
        } else if constexpr (std::is_same_v<T, InsertCentroid>) {
          return with_point(ds, NewPoint{ds.x.colwise().mean().transpose(), ds.y.mean()});
        } else if constexpr (std::is_same_v<T, Scale>) {
          if (t.a == 0.0 || t.b == 0.0) throw InvalidArgument("scale factors must be non-zero");
          out.y *= t.a;
          if (t.b != 1.0) {
            detail::check_variable(t.k, d, "k");
            out.x.col(static_cast<Eigen::Index>(t.k - 1)) *= t.b;
          }
          return out;
        } else if constexpr (std::is_same_v<T, Shift>) {
          if (!ds.has_intercept) throw ShiftRequiresIntercept("shift needs the intercept form");
          out.y.array() += t.a;
          if (t.b != 0.0) {
            detail::check_variable(t.k, d, "k");
            out.x.col(static_cast<Eigen::Index>(t.k - 1)).array() += t.b;
          }
          return out;
        } else if constexpr (std::is_same_v<T, PermuteSamples>) {
          detail::check_bijection(t.order, ds.n(), "sample permutation");
          for (std::size_t i = 0; i < t.order.size(); ++i) {
            out.x.row(static_cast<Eigen::Index>(i)) = ds.x.row(static_cast<Eigen::Index>(t.order[i]));
            out.y(static_cast<Eigen::Index>(i)) = ds.y(static_cast<Eigen::Index>(t.order[i]));
          }
          return out;
        } else if constexpr (std::is_same_v<T, PermuteVariables>) {
          detail::check_bijection(t.order, d, "variable permutation");
          for (std::size_t k = 0; k < d; ++k)
            out.x.col(static_cast<Eigen::Index>(k)) = ds.x.col(static_cast<Eigen::Index>(t.order[k]));
          return out;
        } else if constexpr (std::is_same_v<T, SwapVariables>) {
          detail::check_pair(t.p, t.q, d);
          out.x.col(static_cast<Eigen::Index>(t.p - 1)).swap(out.x.col(static_cast<Eigen::Index>(t.q - 1)));
          return out;
        } else if constexpr (std::is_same_v<T, Rotate>) {
          detail::check_pair(t.p, t.q, d);
          const double c = std::cos(t.theta);
          const double s = std::sin(t.theta);
          const auto p = static_cast<Eigen::Index>(t.p - 1);
          const auto q = static_cast<Eigen::Index>(t.q - 1);
          out.x.col(p) = ds.x.col(p) * c - ds.x.col(q) * s;
          out.x.col(q) = ds.x.col(p) * s + ds.x.col(q) * c;
          return out;
        } else {
          static_assert(detail::always_false<T>, "unhandled transform");
        }
      },
      spec);
}

/// Expected estimator after `spec`, given the estimator before it.
/// The forward-error bound is carried through the linear map by its 2-norm.
inline Estimator transform_estimator(const Estimator& est, const TransformSpec& spec) {
  using namespace transforms;
  if (!est.beta.allFinite()) throw InvalidArgument("estimator must be finite");
  const std::size_t off = est.has_intercept ? 1 : 0;
  if (est.size() < off + 1) throw DimensionMismatch("estimator has no variable coefficients");
  const std::size_t d = est.size() - off;
  Estimator out = est;
  double gain = 1.0;
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, InsertPoint> || std::is_same_v<T, InsertCentroid> ||
                      std::is_same_v<T, PermuteSamples>) {
          // identity
        } else if constexpr (std::is_same_v<T, Scale>) {
          if (t.a == 0.0 || t.b == 0.0) throw InvalidArgument("scale factors must be non-zero");
          out.beta *= t.a;
          gain = std::abs(t.a);
          if (t.b != 1.0) {
            detail::check_variable(t.k, d, "k");
            const auto k = coef_index(t.k, est.has_intercept);
            out.beta(k) = (t.a / t.b) * est.beta(k);
            gain = std::max(gain, std::abs(t.a / t.b));
          }
        } else if constexpr (std::is_same_v<T, Shift>) {
          if (!est.has_intercept) throw ShiftRequiresIntercept("shift needs the intercept form");
          double b_term = 0.0;
          if (t.b != 0.0) {
            detail::check_variable(t.k, d, "k");
            b_term = t.b * est.beta(coef_index(t.k, true));
            gain = detail::shift_gain(t.b);
          }
          out.beta(0) = est.beta(0) - b_term + t.a;
        } else if constexpr (std::is_same_v<T, PermuteVariables>) {
          detail::check_bijection(t.order, d, "variable permutation");
          for (std::size_t k = 0; k < d; ++k)
            out.beta(static_cast<Eigen::Index>(k + off)) = est.beta(static_cast<Eigen::Index>(t.order[k] + off));
        } else if constexpr (std::is_same_v<T, SwapVariables>) {
          detail::check_pair(t.p, t.q, d);
          std::swap(out.beta(coef_index(t.p, est.has_intercept)), out.beta(coef_index(t.q, est.has_intercept)));
        } else if constexpr (std::is_same_v<T, Rotate>) {
          detail::check_pair(t.p, t.q, d);
          const double c = std::cos(t.theta);
          const double s = std::sin(t.theta);
          const auto p = coef_index(t.p, est.has_intercept);
          const auto q = coef_index(t.q, est.has_intercept);
          out.beta(p) = est.beta(p) * c - est.beta(q) * s;
          out.beta(q) = est.beta(p) * s + est.beta(q) * c;
        } else {
          static_assert(detail::always_false<T>, "unhandled transform");
        }
      },
      spec);
  if (gain != 1.0) out.set_delta_norm(gain * est.delta_norm());
  return out;
}

}  // namespace mtlr
