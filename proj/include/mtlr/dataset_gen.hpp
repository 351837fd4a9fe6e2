#pragma once

// Synthetic regression datasets.
//
// Each variable z is a constant centre plus a scaled normal deviation,
//   z_i = zbar + Z * r * nrand(),
// with zbar ~ U[-B, B] and range Z ~ U[0, B] per variable. The response is
//   y_i = beta_0 + sum_j x_ij beta_j + Z_y * r * nrand().
// Values outside [-B, B] are redrawn rather than clipped.

#include <algorithm>
#include <cstdint>
#include <string>

#include "mtlr/dataset.hpp"
#include "mtlr/error_bounds.hpp"
#include "mtlr/random.hpp"

namespace mtlr {

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

struct GenSpec {
  IntRange d_range{2, 16};
  IntRange n_range{20, 200};
  double value_bound = 100.0;
  /// r for the response noise; 0 gives noise-free responses.
  double snr = 0.1;
  /// r for the predictor deviations. Kept apart from snr so that a
  /// noise-free response still has well-spread predictors.
  double x_spread = 0.1;
  bool has_intercept = true;
  std::uint64_t seed = 1;

  void validate() const {
    if (d_range.lo < 1 || d_range.hi < d_range.lo) throw InvalidArgument("d_range must satisfy 1 <= lo <= hi");
    if (n_range.lo < 1 || n_range.hi < n_range.lo) throw InvalidArgument("n_range must satisfy 1 <= lo <= hi");
    if (!(value_bound > 0.0)) throw InvalidArgument("value_bound must be positive");
    if (!(snr >= 0.0 && snr <= 1.0)) throw InvalidArgument("snr must lie in [0, 1]");
    if (!(x_spread > 0.0 && x_spread <= 1.0)) throw InvalidArgument("x_spread must lie in (0, 1]");
    if (n_range.hi < d_range.lo + 2)
      throw InfeasibleSpec("no (d, n) pair in the ranges satisfies n >= d + 2");
  }
};

struct GeneratedDataset {
  Dataset ds;
  Eigen::VectorXd true_beta;
  /// Z per predictor column, then Z for y.
  Eigen::VectorXd z_ranges;
  std::uint64_t seed = 0;
};

namespace detail {

inline double bounded_draw(Rng& rng, double centre, double spread, double bound) {
  for (;;) {
    const double v = centre + spread * rng.nrand();
    if (std::abs(v) <= bound) return v;
  }
}

}  // namespace detail

/// Deterministic in spec.seed. Draws are repeated until the design has full
/// column rank under the solver's rank tolerance.
inline GeneratedDataset generate(const GenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const double bound = spec.value_bound;
  constexpr int max_attempts = 64;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const auto d = rng.uniform_int(spec.d_range.lo, std::min(spec.d_range.hi, spec.n_range.hi - 2));
    const auto n = rng.uniform_int(std::max(spec.n_range.lo, d + 2), spec.n_range.hi);

    GeneratedDataset g;
    g.seed = spec.seed;
    g.ds.has_intercept = spec.has_intercept;
    g.ds.x.resize(n, d);
    g.ds.y.resize(n);
    g.z_ranges.resize(d + 1);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double centre = rng.uniform(-bound, bound);
      const double range = rng.uniform(0.0, bound);
      g.z_ranges(j) = range;
      for (Eigen::Index i = 0; i < n; ++i)
        g.ds.x(i, j) = detail::bounded_draw(rng, centre, range * spec.x_spread, bound);
    }

    // Coefficients are sized so the noise-free response stays within 0.9 B.
    const auto off = spec.has_intercept ? 1 : 0;
    g.true_beta.resize(d + off);
    if (spec.has_intercept) g.true_beta(0) = rng.uniform(-0.1 * bound, 0.1 * bound);
    const double slope = 0.8 / static_cast<double>(d);
    for (Eigen::Index j = 0; j < d; ++j) g.true_beta(j + off) = rng.uniform(-slope, slope);

    const double y_range = rng.uniform(0.0, bound);
    g.z_ranges(d) = y_range;
    for (Eigen::Index i = 0; i < n; ++i) {
      double clean = spec.has_intercept ? g.true_beta(0) : 0.0;
      for (Eigen::Index j = 0; j < d; ++j) clean += g.ds.x(i, j) * g.true_beta(j + off);
      g.ds.y(i) = spec.snr == 0.0 ? clean : detail::bounded_draw(rng, clean, y_range * spec.snr, bound);
    }

    try {
      (void)condition_number(g.ds);
    } catch (const RankDeficient&) {
      continue;
    }
    return g;
  }
  throw InfeasibleSpec("could not draw a full-rank dataset in " + std::to_string(max_attempts) + " attempts");
}

}  // namespace mtlr
