#pragma once

// The eleven metamorphic relations for least-squares regression.
//
// Each relation pairs a dataset transform (the follow-up input) with the
// analytic transform of the estimator (the expected follow-up output):
//
//   MR1.1 insert a point predicted by the source model      O_f = O_s
//   MR1.2 insert the centroid (intercept form)               O_f = O_s
//   MR2.1 y -> -y                                            O_f = -O_s
//   MR2.2 x_k -> -x_k                                        beta_k -> -beta_k
//   MR3.1 y -> a y, a > 0                                    O_f = a O_s
//   MR3.2 x_k -> b x_k, b > 0                                beta_k -> beta_k / b
//   MR4.1 y -> y + a (intercept form)                        beta_0 -> beta_0 + a
//   MR4.2 x_k -> x_k + b (intercept form)                    beta_0 -> beta_0 - b beta_k
//   MR5.1 swap two samples                                   O_f = O_s
//   MR5.2 swap x_p and x_q                                   swap beta_p, beta_q
//   MR6   rotate (x_p, x_q) by theta                         rotate (beta_p, beta_q) by theta
//
// A relation is violated when ||expected - actual||^2 > ||delta_s||^2 + ||delta_f||^2.

#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtlr/error_bounds.hpp"
#include "mtlr/random.hpp"
#include "mtlr/sut.hpp"
#include "mtlr/transform.hpp"

namespace mtlr {

enum class MrId { MR1_1, MR1_2, MR2_1, MR2_2, MR3_1, MR3_2, MR4_1, MR4_2, MR5_1, MR5_2, MR6 };

inline constexpr std::array<MrId, 11> all_mrs = {MrId::MR1_1, MrId::MR1_2, MrId::MR2_1, MrId::MR2_2,
                                                 MrId::MR3_1, MrId::MR3_2, MrId::MR4_1, MrId::MR4_2,
                                                 MrId::MR5_1, MrId::MR5_2, MrId::MR6};

inline const char* to_string(MrId mr) {
  switch (mr) {
    case MrId::MR1_1: return "MR1.1";
    case MrId::MR1_2: return "MR1.2";
    case MrId::MR2_1: return "MR2.1";
    case MrId::MR2_2: return "MR2.2";
    case MrId::MR3_1: return "MR3.1";
    case MrId::MR3_2: return "MR3.2";
    case MrId::MR4_1: return "MR4.1";
    case MrId::MR4_2: return "MR4.2";
    case MrId::MR5_1: return "MR5.1";
    case MrId::MR5_2: return "MR5.2";
    case MrId::MR6: return "MR6";
  }
  return "?";
}

/// Accepts "MR1.1", "mr1_1", "1.1", "MR6", "6".
inline std::optional<MrId> parse_mr(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(c == '_' ? '.' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (s.rfind("MR", 0) != 0) s = "MR" + s;
  for (auto mr : all_mrs)
    if (s == to_string(mr)) return mr;
  return std::nullopt;
}

/// Centroid and shift relations need the intercept form; the rest apply to both forms.
inline bool applicable(MrId mr, bool has_intercept) {
  if (has_intercept) return true;
  return mr != MrId::MR1_2 && mr != MrId::MR4_1 && mr != MrId::MR4_2;
}

struct MetamorphicTestGroup {
  MrId mr = MrId::MR1_1;
  Dataset source;
  std::vector<Dataset> followups;
  TransformSpec spec;
  bool source_output_dependent = false;
};

enum class VerdictKind { satisfied, violated, source_failure, followup_failure, inapplicable };

inline const char* to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::satisfied: return "satisfied";
    case VerdictKind::violated: return "violated";
    case VerdictKind::source_failure: return "source_failure";
    case VerdictKind::followup_failure: return "followup_failure";
    case VerdictKind::inapplicable: return "inapplicable";
  }
  return "?";
}

struct Verdict {
  VerdictKind kind = VerdictKind::inapplicable;
  /// ||expected - actual||_2^2 and ||delta_s||^2 + ||delta_f||^2; zero unless judged.
  double discrepancy_sq = 0.0;
  double tolerance_sq = 0.0;
  std::string detail;
};

namespace detail {

inline void require(bool cond, MrId mr, const char* what) {
  if (!cond) throw InvalidArgument(std::string(to_string(mr)) + ": " + what);
}

// Each relation accepts exactly one transform shape.
inline void check_spec(MrId mr, const TransformSpec& spec) {
  using namespace transforms;
  const auto* scale = std::get_if<Scale>(&spec);
  const auto* shift = std::get_if<Shift>(&spec);
  switch (mr) {
    case MrId::MR1_1: require(std::holds_alternative<InsertPoint>(spec), mr, "expects insert_point"); break;
    case MrId::MR1_2: require(std::holds_alternative<InsertCentroid>(spec), mr, "expects insert_centroid"); break;
    case MrId::MR2_1: require(scale && scale->a == -1.0 && scale->b == 1.0, mr, "expects scale(a=-1, b=1)"); break;
    case MrId::MR2_2: require(scale && scale->a == 1.0 && scale->b == -1.0, mr, "expects scale(a=1, b=-1)"); break;
    case MrId::MR3_1: require(scale && scale->a > 0.0 && scale->b == 1.0, mr, "expects scale(a>0, b=1)"); break;
    case MrId::MR3_2: require(scale && scale->a == 1.0 && scale->b > 0.0, mr, "expects scale(a=1, b>0)"); break;
    case MrId::MR4_1: require(shift && shift->b == 0.0, mr, "expects shift(a, b=0)"); break;
    case MrId::MR4_2: require(shift && shift->a == 0.0, mr, "expects shift(a=0, b)"); break;
    case MrId::MR5_1: require(std::holds_alternative<PermuteSamples>(spec), mr, "expects permute_samples"); break;
    case MrId::MR5_2: require(std::holds_alternative<SwapVariables>(spec), mr, "expects swap_vars"); break;
    case MrId::MR6: require(std::holds_alternative<Rotate>(spec), mr, "expects rotate"); break;
  }
}

inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

inline double nonzero_uniform(Rng& rng, double lo, double hi) {
  for (;;)
    if (const double v = rng.uniform(lo, hi); v != 0.0) return v;
}

}  // namespace detail

/// Samples MR parameters: positive scales log-uniform on [0.1, 10], shifts
/// non-zero on [-100, 100], angles on [0, 2 pi), inserted points uniform in
/// the bounding box of the source.
inline TransformSpec draw_transform(MrId mr, const Dataset& source, Rng& rng) {
  using namespace transforms;
  const auto d = static_cast<std::int64_t>(source.d());
  const auto var = [&] { return static_cast<std::size_t>(rng.uniform_int(1, d)); };
  const auto pair = [&]() -> std::pair<std::size_t, std::size_t> {
    if (d < 2) throw Inapplicable(std::string(to_string(mr)) + " needs at least two variables");
    const auto p = rng.uniform_int(1, d);
    auto q = rng.uniform_int(1, d - 1);
    if (q >= p) ++q;
    return {static_cast<std::size_t>(p), static_cast<std::size_t>(q)};
  };
  switch (mr) {
    case MrId::MR1_1: {
      Eigen::VectorXd xs(d);
      for (Eigen::Index j = 0; j < d; ++j) xs(j) = rng.uniform(source.x.col(j).minCoeff(), source.x.col(j).maxCoeff());
      return InsertPoint{xs, std::nullopt};
    }
    case MrId::MR1_2: return InsertCentroid{};
    case MrId::MR2_1: return Scale{-1.0, 1.0, 0};
    case MrId::MR2_2: return Scale{1.0, -1.0, var()};
    case MrId::MR3_1: return Scale{detail::log_uniform(rng, 0.1, 10.0), 1.0, 0};
    case MrId::MR3_2: {
      const auto k = var();
      return Scale{1.0, detail::log_uniform(rng, 0.1, 10.0), k};
    }
    case MrId::MR4_1: return Shift{detail::nonzero_uniform(rng, -100.0, 100.0), 0.0, 0};
    case MrId::MR4_2: {
      const auto k = var();
      return Shift{0.0, detail::nonzero_uniform(rng, -100.0, 100.0), k};
    }
    case MrId::MR5_1: {
      const auto n = static_cast<std::int64_t>(source.n());
      if (n < 2) throw Inapplicable("MR5.1 needs at least two samples");
      const auto p = rng.uniform_int(0, n - 1);
      auto q = rng.uniform_int(0, n - 2);
      if (q >= p) ++q;
      PermuteSamples t;
      t.order.resize(source.n());
      for (std::size_t i = 0; i < t.order.size(); ++i) t.order[i] = i;
      std::swap(t.order[static_cast<std::size_t>(p)], t.order[static_cast<std::size_t>(q)]);
      return t;
    }
    case MrId::MR5_2: {
      const auto [p, q] = pair();
      return SwapVariables{p, q};
    }
    case MrId::MR6: {
      const auto [p, q] = pair();
      return Rotate{p, q, rng.uniform(0.0, 2.0 * std::numbers::pi)};
    }
  }
  throw InvalidArgument("unknown MR");
}

/// Builds the follow-up input. MR1.1 resolves y* from `source_out`.
inline MetamorphicTestGroup make_followup(MrId mr, const Dataset& source, const std::optional<Estimator>& source_out,
                                          const TransformSpec& spec) {
  if (!applicable(mr, source.has_intercept))
    throw Inapplicable(std::string(to_string(mr)) + " requires the intercept form");
  detail::check_spec(mr, spec);
  MetamorphicTestGroup g;
  g.mr = mr;
  g.source = source;
  g.spec = spec;
  if (mr == MrId::MR1_1) {
    if (!source_out) throw MissingSourceOutput("MR1.1 needs the source output to place the new point");
    auto& ins = std::get<transforms::InsertPoint>(g.spec);
    ins.ystar = predict(*source_out, ins.xstar);
    g.source_output_dependent = true;
  }
  g.followups.push_back(apply_transform(source, g.spec));
  return g;
}

inline MetamorphicTestGroup make_followup(MrId mr, const Dataset& source, const std::optional<Estimator>& source_out,
                                          Rng& rng) {
  if (!applicable(mr, source.has_intercept))
    throw Inapplicable(std::string(to_string(mr)) + " requires the intercept form");
  return make_followup(mr, source, source_out, draw_transform(mr, source, rng));
}

/// Expected follow-up estimator, with the source bound propagated through the map.
inline Estimator expected_followup_output(MrId mr, const TransformSpec& spec, const Estimator& source_out) {
  if (!applicable(mr, source_out.has_intercept))
    throw Inapplicable(std::string(to_string(mr)) + " requires the intercept form");
  detail::check_spec(mr, spec);
  return transform_estimator(source_out, spec);
}

inline Verdict judge(MrId mr, const Estimator& expected, const Estimator& actual, const ErrorBound& delta_s,
                     const ErrorBound& delta_f) {
  if (expected.size() != actual.size())
    throw DimensionMismatch(std::string(to_string(mr)) + ": expected " + std::to_string(expected.size()) +
                            " coefficients, got " + std::to_string(actual.size()));
  Verdict v;
  v.discrepancy_sq = (expected.beta - actual.beta).squaredNorm();
  v.tolerance_sq = delta_s.delta_norm * delta_s.delta_norm + delta_f.delta_norm * delta_f.delta_norm;
  const bool violated = !std::isfinite(v.discrepancy_sq) || v.discrepancy_sq > v.tolerance_sq;
  v.kind = violated ? VerdictKind::violated : VerdictKind::satisfied;
  return v;
}

struct MtgRun {
  Verdict verdict;
  std::optional<SutOutcome> source;
  std::optional<SutOutcome> followup;
  std::optional<MetamorphicTestGroup> mtg;
};

/// Source run, follow-up construction, follow-up run and verdict for one MTG.
/// `cached_source` lets callers reuse a source execution across relations.
inline MtgRun run_mtg(const SutHandle& sut, MrId mr, const Dataset& source, const TransformSpec& spec,
                      const BoundConfig& cfg = {}, const SutOutcome* cached_source = nullptr) {
  MtgRun run;
  if (!applicable(mr, source.has_intercept)) {
    run.verdict.kind = VerdictKind::inapplicable;
    run.verdict.detail = "relation needs the intercept form";
    return run;
  }
  run.source = cached_source ? *cached_source : execute(sut, source);
  if (!run.source->ok()) {
    run.verdict.kind = VerdictKind::source_failure;
    run.verdict.detail = std::string(to_string(run.source->status)) + ": " + run.source->detail;
    return run;
  }
  Estimator source_out = *run.source->estimator;
  run.mtg = make_followup(mr, source, source_out, spec);
  const Dataset& followup = run.mtg->followups.front();
  run.followup = execute(sut, followup);
  if (!run.followup->ok()) {
    run.verdict.kind = VerdictKind::followup_failure;
    run.verdict.detail = std::string(to_string(run.followup->status)) + ": " + run.followup->detail;
    return run;
  }
  const ErrorBound bound_s = forward_bound(source, source_out, cfg);
  const ErrorBound bound_f = forward_bound(followup, *run.followup->estimator, cfg);
  source_out.set_delta_norm(bound_s.delta_norm);
  const Estimator expected = expected_followup_output(mr, run.mtg->spec, source_out);
  ErrorBound mapped = bound_s;
  mapped.delta_norm = expected.delta_norm();
  run.verdict = judge(mr, expected, *run.followup->estimator, mapped, bound_f);
  return run;
}

// ---------------------------------------------------------------------------
// JSON audit records

inline nlohmann::json to_json(const TransformSpec& spec) {
  using namespace transforms;
  return std::visit(
      [](const auto& t) -> nlohmann::json {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, InsertPoint>) {
          nlohmann::json j{{"kind", "insert_point"},
                           {"xstar", std::vector<double>(t.xstar.data(), t.xstar.data() + t.xstar.size())}};
          j["ystar"] = t.ystar ? nlohmann::json(*t.ystar) : nlohmann::json(nullptr);
          return j;
        } else if constexpr (std::is_same_v<T, InsertCentroid>) {
          return {{"kind", "insert_centroid"}};
        } else if constexpr (std::is_same_v<T, Scale>) {
          return {{"kind", "scale"}, {"a", t.a}, {"b", t.b}, {"k", t.k}};
        } else if constexpr (std::is_same_v<T, Shift>) {
          return {{"kind", "shift"}, {"a", t.a}, {"b", t.b}, {"k", t.k}};
        } else if constexpr (std::is_same_v<T, PermuteSamples>) {
          return {{"kind", "permute_samples"}, {"order", t.order}};
        } else if constexpr (std::is_same_v<T, PermuteVariables>) {
          return {{"kind", "permute_vars"}, {"order", t.order}};
        } else if constexpr (std::is_same_v<T, SwapVariables>) {
          return {{"kind", "swap_vars"}, {"p", t.p}, {"q", t.q}};
        } else {
          return {{"kind", "rotate"}, {"p", t.p}, {"q", t.q}, {"theta", t.theta}};
        }
      },
      spec);
}

inline TransformSpec transform_from_json(const nlohmann::json& j) {
  using namespace transforms;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "insert_point") {
    const auto xs = j.at("xstar").get<std::vector<double>>();
    InsertPoint t{Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())), std::nullopt};
    if (j.contains("ystar") && !j["ystar"].is_null()) t.ystar = j["ystar"].get<double>();
    return t;
  }
  if (kind == "insert_centroid") return InsertCentroid{};
  if (kind == "scale") return Scale{j.at("a").get<double>(), j.at("b").get<double>(), j.at("k").get<std::size_t>()};
  if (kind == "shift") return Shift{j.at("a").get<double>(), j.at("b").get<double>(), j.at("k").get<std::size_t>()};
  if (kind == "permute_samples") return PermuteSamples{j.at("order").get<std::vector<std::size_t>>()};
  if (kind == "permute_vars") return PermuteVariables{j.at("order").get<std::vector<std::size_t>>()};
  if (kind == "swap_vars") return SwapVariables{j.at("p").get<std::size_t>(), j.at("q").get<std::size_t>()};
  if (kind == "rotate")
    return Rotate{j.at("p").get<std::size_t>(), j.at("q").get<std::size_t>(), j.at("theta").get<double>()};
  throw InvalidArgument("unknown transform kind '" + kind + "'");
}

/// {mr, spec, source_ref, followup_ref} record for audit replay.
inline nlohmann::json mtg_record(const MetamorphicTestGroup& g, const std::string& source_ref,
                                 const std::string& followup_ref) {
  return {{"mr", to_string(g.mr)}, {"spec", to_json(g.spec)}, {"source_ref", source_ref}, {"followup_ref", followup_ref}};
}

}  // namespace mtlr
