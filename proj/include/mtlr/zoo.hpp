#pragma once

// Catalog of seeded solver faults, grouped by the mutation categories used
// for source-level mutation of regression programs. Each entry names the
// pipeline stage it corrupts; see solver.hpp for the injection points.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtlr/dataset_gen.hpp"
#include "mtlr/sut.hpp"

namespace mtlr {

enum class FaultCategory {
  array_construct,
  array_index,
  array_swap1,
  array_swap2,
  condition_if,
  condition_index,
  condition_loop,
  data_simple,
  function_parameter,
  function_return,
  logic_combination,
  logic_comparison,
  logic_not,
  math_increment,
  math_initial,
  math_operator,
  math_values,
};

inline constexpr std::array<FaultCategory, 17> all_fault_categories = {
    FaultCategory::array_construct,    FaultCategory::array_index,      FaultCategory::array_swap1,
    FaultCategory::array_swap2,        FaultCategory::condition_if,     FaultCategory::condition_index,
    FaultCategory::condition_loop,     FaultCategory::data_simple,      FaultCategory::function_parameter,
    FaultCategory::function_return,    FaultCategory::logic_combination, FaultCategory::logic_comparison,
    FaultCategory::logic_not,          FaultCategory::math_increment,   FaultCategory::math_initial,
    FaultCategory::math_operator,      FaultCategory::math_values};

inline const char* to_string(FaultCategory c) {
  switch (c) {
    case FaultCategory::array_construct: return "array_construct";
    case FaultCategory::array_index: return "array_index";
    case FaultCategory::array_swap1: return "array_swap1";
    case FaultCategory::array_swap2: return "array_swap2";
    case FaultCategory::condition_if: return "condition_if";
    case FaultCategory::condition_index: return "condition_index";
    case FaultCategory::condition_loop: return "condition_loop";
    case FaultCategory::data_simple: return "data_simple";
    case FaultCategory::function_parameter: return "function_parameter";
    case FaultCategory::function_return: return "function_return";
    case FaultCategory::logic_combination: return "logic_combination";
    case FaultCategory::logic_comparison: return "logic_comparison";
    case FaultCategory::logic_not: return "logic_not";
    case FaultCategory::math_increment: return "math_increment";
    case FaultCategory::math_initial: return "math_initial";
    case FaultCategory::math_operator: return "math_operator";
    case FaultCategory::math_values: return "math_values";
  }
  return "?";
}

struct FaultSpec {
  std::string id;
  FaultCategory category;
  std::string description;
  std::string stage;
  Fault fault;
};

inline const std::vector<FaultSpec>& catalog() {
  using C = FaultCategory;
  using F = Fault;
  static const std::vector<FaultSpec> faults = {
      // array_construct
      {"drop-intercept", C::array_construct, "design built without the ones column; intercept reported as 0", "assemble", F::drop_intercept},
      {"intercept-doubled", C::array_construct, "ones column filled with 2", "assemble", F::intercept_doubled},
      {"response-negated", C::array_construct, "response vector assembled as -y", "assemble", F::response_negated},
      // array_index
      {"response-offset", C::array_index, "row i paired with y[(i+1) mod n]", "assemble", F::response_offset},
      {"column-shift", C::array_index, "design column j read from x column (j+1) mod d", "assemble", F::column_shift},
      {"row-overrun", C::array_index, "last sample read one row past the end (bounds-checked, throws)", "assemble", F::row_overrun},
      {"column-order", C::array_index, "columns reordered by mean before solving; coefficients reported in that order", "assemble", F::column_order},
      // array_swap1
      {"coef-swap", C::array_swap1, "first two output coefficients exchanged", "output", F::coef_swap},
      {"diag-misplaced", C::array_swap1, "back substitution divides by the next diagonal entry", "back_substitute", F::diag_misplaced},
      // array_swap2
      {"backsub-transposed", C::array_swap2, "back substitution reads R(j,k) instead of R(k,j)", "back_substitute", F::backsub_transposed},
      {"design-block-transposed", C::array_swap2, "leading square block of the design matrix transposed", "assemble", F::design_block_transposed},
      // condition_if
      {"noop", C::condition_if, "control: guarded branch that never fires", "output", F::noop},
      {"skip-rank-check", C::condition_if, "rank check disabled", "rank_check", F::skip_rank_check},
      {"skip-positive-pivot", C::condition_if, "reflector skipped whenever the pivot is positive", "factorize", F::skip_positive_pivot},
      // condition_index
      {"reflector-starts-late", C::condition_index, "column norm accumulated from row k+1", "factorize", F::reflector_starts_late},
      {"backsub-drops-last", C::condition_index, "back-substitution sum stops before the last column", "back_substitute", F::backsub_drops_last},
      // condition_loop
      {"early-break", C::condition_loop, "factorization loop breaks before the last column", "factorize", F::early_break},
      {"infinite-loop", C::condition_loop, "factorization loop counter never advances", "factorize", F::infinite_loop},
      {"skip-odd-rows", C::condition_loop, "assembly loop continues past odd-indexed samples", "assemble", F::skip_odd_rows},
      // data_simple
      {"response-truncated", C::data_simple, "response stored as an integer", "assemble", F::response_truncated},
      {"single-precision", C::data_simple, "factorization state rounded to float after each step", "factorize", F::single_precision},
      {"integer-output", C::data_simple, "coefficients truncated to integers", "output", F::integer_output},
      // function_parameter
      {"norm-doubled", C::function_parameter, "sqrt called with twice the sum of squares", "factorize", F::norm_doubled},
      {"reflector-half-weight", C::function_parameter, "reflector weight 1/v'v instead of 2/v'v", "factorize", F::reflector_half_weight},
      // function_return
      {"return-zero", C::function_return, "solver returns all-zero coefficients", "output", F::return_zero},
      {"return-empty", C::function_return, "solver returns no coefficients", "output", F::return_empty},
      {"return-negated", C::function_return, "solver returns -beta", "output", F::return_negated},
      // logic_combination
      {"guard-and-odd", C::logic_combination, "reflector guard gains '&& k is even'", "factorize", F::guard_and_odd},
      {"intercept-guard-or", C::logic_combination, "ones entry written only under 'i < n/2 || !intercept'", "assemble", F::intercept_guard_or},
      // logic_comparison
      {"apply-skips-last-row", C::logic_comparison, "reflector applied to y with i < n-1", "factorize", F::apply_skips_last_row},
      {"rank-check-reversed", C::logic_comparison, "rank test uses > instead of <", "rank_check", F::rank_check_reversed},
      // logic_not
      {"intercept-flag-negated", C::logic_not, "intercept flag negated during assembly", "assemble", F::intercept_flag_negated},
      {"zero-test-negated", C::logic_not, "zero-column test negated; every reflector skipped", "factorize", F::zero_test_negated},
      // math_increment
      {"column-stride-two", C::math_increment, "factorization column counter advances by 2", "factorize", F::column_stride_two},
      {"row-stride-two", C::math_increment, "reflector update visits every other row", "factorize", F::row_stride_two},
      // math_initial
      {"norm-init-one", C::math_initial, "sum of squares initialized to 1", "factorize", F::norm_init_one},
      {"dot-init-one", C::math_initial, "reflector dot product with y initialized to 1", "factorize", F::dot_init_one},
      // math_operator
      {"backsub-plus", C::math_operator, "back substitution adds known terms instead of subtracting", "back_substitute", F::backsub_plus},
      {"reflector-plus", C::math_operator, "reflector update adds instead of subtracting", "factorize", F::reflector_plus},
      {"zero-divisor", C::math_operator, "divisor computed as R(k,k) - R(k,k)", "back_substitute", F::zero_divisor},
      // math_values
      {"rhs-plus-one", C::math_values, "right-hand side offset by +1 in back substitution", "back_substitute", F::rhs_plus_one},
      {"intercept-minus-one", C::math_values, "first coefficient reported minus 1", "output", F::intercept_minus_one},
  };
  return faults;
}

inline const FaultSpec& find_fault(std::string_view id) {
  for (const auto& f : catalog())
    if (f.id == id) return f;
  throw UnknownFault("no fault named '" + std::string(id) + "'");
}

/// In-process SUT running the reference pipeline with `f` injected.
inline SutHandle instantiate(const FaultSpec& f) {
  const auto& known = find_fault(f.id);
  return in_process_sut(known.id, known.fault);
}

inline nlohmann::json catalog_json() {
  auto arr = nlohmann::json::array();
  for (const auto& f : catalog())
    arr.push_back({{"id", f.id}, {"category", to_string(f.category)}, {"description", f.description}, {"stage", f.stage}});
  return arr;
}

struct EquivalenceReport {
  std::string fault_id;
  bool equivalent = false;
  std::size_t probes_used = 0;
  /// Index of the first probe whose output differed.
  std::optional<std::size_t> first_difference;
};

namespace detail {

inline bool same_behaviour(const SutOutcome& a, const SutOutcome& b) {
  if (a.status != b.status) return false;
  if (!a.ok()) return true;
  const auto& x = a.estimator->beta;
  const auto& y = b.estimator->beta;
  if (x.size() != y.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::bit_cast<std::uint64_t>(x(i)) != std::bit_cast<std::uint64_t>(y(i))) return false;
  return true;
}

}  // namespace detail

/// 100 probe datasets from the standard generator, seeded from `seed`.
inline std::vector<GeneratedDataset> make_probes(std::uint64_t seed, std::size_t count = 100, bool has_intercept = true) {
  std::vector<GeneratedDataset> probes;
  probes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    GenSpec spec;
    spec.seed = derive_seed(seed, 0x70726f6265ULL, i);
    spec.has_intercept = has_intercept;
    probes.push_back(generate(spec));
  }
  return probes;
}

/// A fault is equivalent when its outcome matches the reference bit-for-bit
/// on every probe. Comparison stops at the first difference.
inline std::vector<EquivalenceReport> filter_equivalents(const std::vector<FaultSpec>& faults,
                                                         const std::vector<GeneratedDataset>& probes) {
  SutHandle ref = reference_sut();
  std::vector<SutOutcome> expected;
  expected.reserve(probes.size());
  std::vector<Nanos> baselines;
  for (const auto& p : probes) {
    baselines.push_back(calibrate(ref, p.ds));
    expected.push_back(execute(ref, p.ds));
  }
  std::vector<EquivalenceReport> out;
  for (const auto& f : faults) {
    SutHandle sut = instantiate(f);
    EquivalenceReport rep;
    rep.fault_id = f.id;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      sut.baseline_runtime = baselines[i];
      rep.probes_used = i + 1;
      if (!detail::same_behaviour(execute(sut, probes[i].ds), expected[i])) {
        rep.first_difference = i;
        break;
      }
    }
    rep.equivalent = !rep.first_difference.has_value();
    out.push_back(std::move(rep));
  }
  return out;
}

/// Non-equivalent count as a function of probe count (1..max_probes).
inline std::vector<std::size_t> equivalence_curve(const std::vector<EquivalenceReport>& reports, std::size_t max_probes) {
  std::vector<std::size_t> curve(max_probes, 0);
  for (const auto& r : reports)
    if (r.first_difference)
      for (std::size_t k = *r.first_difference; k < max_probes; ++k) ++curve[k];
  return curve;
}

}  // namespace mtlr
