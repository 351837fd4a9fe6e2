#pragma once

// Campaign runner: every (SUT x dataset x MR) metamorphic test group plus
// the two-random-test-case (R2) baseline, with ratio metrics and reports.
//
//   ratio of violation    = violated / (violated + satisfied)   over survived pairs
//   extended ratio (MT)   = (violated + source/follow-up failures) / pairs
//   extended ratio (R2)   = pairs with a runtime failure in either test case / pairs
//
// R2 reuses each MT source dataset as its first test case and draws a
// second, independent dataset from the same generator.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mtlr/mr.hpp"
#include "mtlr/zoo.hpp"

namespace mtlr {

/// Pseudo fault id that selects the unmodified reference solver.
inline constexpr std::string_view reference_id = "reference";

struct CampaignConfig {
  std::vector<std::string> faults;
  std::vector<std::string> external;
  std::vector<MrId> mrs{all_mrs.begin(), all_mrs.end()};
  std::size_t datasets = 100;
  std::uint64_t seed = 1;
  BoundConfig bounds;
  GenSpec gen;
  std::size_t workers = 0;  // 0: hardware concurrency
  std::size_t equivalence_probes = 0;
  std::optional<double> timeout_factor;
};

struct Tally {
  std::size_t satisfied = 0;
  std::size_t violated = 0;
  std::size_t source_failed = 0;
  std::size_t followup_failed = 0;
  std::size_t inapplicable = 0;

  std::size_t survived() const { return satisfied + violated; }
  std::size_t failed() const { return violated + source_failed + followup_failed; }
  /// Pairs that were actually executed.
  std::size_t pairs() const { return satisfied + violated + source_failed + followup_failed; }
  std::size_t total() const { return pairs() + inapplicable; }

  void add(VerdictKind k) {
    switch (k) {
      case VerdictKind::satisfied: ++satisfied; break;
      case VerdictKind::violated: ++violated; break;
      case VerdictKind::source_failure: ++source_failed; break;
      case VerdictKind::followup_failure: ++followup_failed; break;
      case VerdictKind::inapplicable: ++inapplicable; break;
    }
  }
  Tally& operator+=(const Tally& o) {
    satisfied += o.satisfied;
    violated += o.violated;
    source_failed += o.source_failed;
    followup_failed += o.followup_failed;
    inapplicable += o.inapplicable;
    return *this;
  }
};

/// violations / (violations + satisfactions); throws NoSurvivedPairs when both are zero.
inline double ratio_of_violation(const Tally& t) {
  if (t.survived() == 0) throw NoSurvivedPairs("ratio of violation is undefined without survived pairs");
  return static_cast<double>(t.violated) / static_cast<double>(t.survived());
}

inline double extended_ratio(std::size_t failed_pairs, std::size_t total_pairs) {
  if (total_pairs == 0) throw InvalidArgument("extended ratio needs at least one pair");
  if (failed_pairs > total_pairs) throw InvalidArgument("more failed pairs than pairs");
  return static_cast<double>(failed_pairs) / static_cast<double>(total_pairs);
}

inline double extended_ratio(const Tally& t) { return extended_ratio(t.failed(), t.pairs()); }

struct VerdictRecord {
  std::string sut;
  std::size_t dataset = 0;
  MrId mr = MrId::MR1_1;
  Verdict verdict;
  nlohmann::json spec;
};

struct R2Record {
  std::string sut;
  std::size_t dataset = 0;
  OutcomeStatus first = OutcomeStatus::ok;
  OutcomeStatus second = OutcomeStatus::ok;

  bool failed() const { return first != OutcomeStatus::ok || second != OutcomeStatus::ok; }
};

struct SutInfo {
  std::string id;
  std::optional<FaultCategory> category;
  bool external = false;
};

struct CampaignReport {
  CampaignConfig config;
  std::vector<SutInfo> suts;
  std::vector<EquivalenceReport> equivalence;
  std::vector<VerdictRecord> verdicts;
  std::vector<R2Record> r2;
  bool interrupted = false;
  double wall_seconds = 0.0;

  /// Recounted from the raw logs on every call.
  std::map<std::pair<std::string, MrId>, Tally> tallies() const {
    std::map<std::pair<std::string, MrId>, Tally> out;
    for (const auto& v : verdicts) out[{v.sut, v.mr}].add(v.verdict.kind);
    return out;
  }

  Tally mr_tally(MrId mr) const {
    Tally t;
    for (const auto& v : verdicts)
      if (v.mr == mr) t.add(v.verdict.kind);
    return t;
  }

  std::optional<double> ratio_of_violation_for(MrId mr) const {
    const auto t = mr_tally(mr);
    if (t.survived() == 0) return std::nullopt;
    return ratio_of_violation(t);
  }

  std::optional<double> mt_extended_for(MrId mr) const {
    const auto t = mr_tally(mr);
    if (t.pairs() == 0) return std::nullopt;
    return extended_ratio(t);
  }

  std::optional<double> rt_extended() const {
    if (r2.empty()) return std::nullopt;
    const auto failed = static_cast<std::size_t>(std::count_if(r2.begin(), r2.end(), [](const R2Record& r) { return r.failed(); }));
    return extended_ratio(failed, r2.size());
  }

  /// Median over the configured relations with at least one executed pair.
  std::optional<double> median_mt_extended() const {
    std::vector<double> v;
    for (auto mr : config.mrs)
      if (auto r = mt_extended_for(mr)) v.push_back(*r);
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    const auto mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
  }

  Tally category_tally(FaultCategory c, std::optional<MrId> mr = std::nullopt) const {
    std::map<std::string, bool> in_category;
    for (const auto& s : suts) in_category[s.id] = s.category == c;
    Tally t;
    for (const auto& v : verdicts)
      if (in_category[v.sut] && (!mr || v.mr == *mr)) t.add(v.verdict.kind);
    return t;
  }
};

namespace detail {

constexpr std::uint64_t source_stream = 0x736f75726365ULL;
constexpr std::uint64_t r2_stream = 0x72322d74657374ULL;
constexpr std::uint64_t mr_stream = 0x6d722d706172ULL;

struct TaskResult {
  std::vector<VerdictRecord> verdicts;
  R2Record r2;
  bool done = false;
};

inline std::vector<GeneratedDataset> campaign_datasets(const CampaignConfig& cfg, std::uint64_t stream) {
  std::vector<GeneratedDataset> out;
  out.reserve(cfg.datasets);
  for (std::size_t i = 0; i < cfg.datasets; ++i) {
    GenSpec spec = cfg.gen;
    spec.seed = derive_seed(cfg.seed, stream, i);
    out.push_back(generate(spec));
  }
  return out;
}

inline TaskResult run_task(SutHandle sut, std::size_t index, const Dataset& source, const Dataset& second,
                           const CampaignConfig& cfg) {
  TaskResult res;
  calibrate(sut, source);
  const SutOutcome src = execute(sut, source);
  for (auto mr : cfg.mrs) {
    VerdictRecord rec;
    rec.sut = sut.name;
    rec.dataset = index;
    rec.mr = mr;
    Rng rng(derive_seed(cfg.seed, mr_stream, index * 16 + static_cast<std::size_t>(mr)));
    try {
      const auto spec = draw_transform(mr, source, rng);
      rec.spec = to_json(spec);
      const auto run = run_mtg(sut, mr, source, spec, cfg.bounds, &src);
      rec.verdict = run.verdict;
      if (run.mtg) rec.spec = to_json(run.mtg->spec);
    } catch (const Inapplicable& e) {
      rec.verdict.kind = VerdictKind::inapplicable;
      rec.verdict.detail = e.what();
    }
    res.verdicts.push_back(std::move(rec));
  }
  res.r2.sut = sut.name;
  res.r2.dataset = index;
  res.r2.first = src.status;
  calibrate(sut, second);
  res.r2.second = execute(sut, second).status;
  res.done = true;
  return res;
}

}  // namespace detail

/// Executes the campaign on a bounded worker pool. Results are collated in
/// (SUT, dataset, MR) order, so the verdict log depends only on the config.
/// Setting `*stop` makes workers finish their current task and return what
/// has completed, with `interrupted` set.
inline CampaignReport run_campaign(const CampaignConfig& cfg, const std::atomic<bool>* stop = nullptr) {
  const auto started = std::chrono::steady_clock::now();
  CampaignReport report;
  report.config = cfg;

  std::vector<FaultSpec> zoo_faults;
  std::vector<SutHandle> handles;
  for (const auto& id : cfg.faults) {
    if (id == reference_id) {
      handles.push_back(reference_sut());
      report.suts.push_back({std::string(reference_id), std::nullopt, false});
      continue;
    }
    zoo_faults.push_back(find_fault(id));
  }
  if (cfg.equivalence_probes > 0 && !zoo_faults.empty()) {
    const auto probes = make_probes(cfg.seed, cfg.equivalence_probes, cfg.gen.has_intercept);
    report.equivalence = filter_equivalents(zoo_faults, probes);
    std::vector<FaultSpec> kept;
    for (std::size_t i = 0; i < zoo_faults.size(); ++i)
      if (!report.equivalence[i].equivalent) kept.push_back(zoo_faults[i]);
    zoo_faults = std::move(kept);
  }
  for (const auto& f : zoo_faults) {
    handles.push_back(instantiate(f));
    report.suts.push_back({f.id, f.category, false});
  }
  for (const auto& cmd : cfg.external) {
    handles.push_back(external_sut(split_command(cmd)));
    report.suts.push_back({handles.back().name, std::nullopt, true});
  }
  if (cfg.timeout_factor)
    for (auto& h : handles) h.timeout_factor = *cfg.timeout_factor;

  const auto sources = detail::campaign_datasets(cfg, detail::source_stream);
  const auto seconds = detail::campaign_datasets(cfg, detail::r2_stream);

  const std::size_t tasks = handles.size() * cfg.datasets;
  std::vector<detail::TaskResult> results(tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<bool> abort{false};

  const auto worker = [&] {
    for (;;) {
      if (abort.load() || (stop && stop->load())) return;
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      const std::size_t s = t / cfg.datasets;
      const std::size_t i = t % cfg.datasets;
      try {
        results[t] = detail::run_task(handles[s], i, sources[i].ds, seconds[i].ds, cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        abort = true;
        return;
      }
    }
  };
  std::size_t workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(tasks, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& r : results) {
    if (!r.done) {
      report.interrupted = true;
      continue;
    }
    for (auto& v : r.verdicts) report.verdicts.push_back(std::move(v));
    report.r2.push_back(std::move(r.r2));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json tally_json(const Tally& t) {
  nlohmann::json j{{"satisfied", t.satisfied},
                   {"violated", t.violated},
                   {"source_failed", t.source_failed},
                   {"followup_failed", t.followup_failed},
                   {"inapplicable", t.inapplicable},
                   {"survived", t.survived()}};
  j["ratio_of_violation"] = t.survived() ? nlohmann::json(ratio_of_violation(t)) : nlohmann::json(nullptr);
  j["extended_ratio"] = t.pairs() ? nlohmann::json(extended_ratio(t)) : nlohmann::json(nullptr);
  return j;
}

}  // namespace detail

inline nlohmann::json config_json(const CampaignConfig& cfg) {
  std::vector<std::string> mrs;
  for (auto mr : cfg.mrs) mrs.emplace_back(to_string(mr));
  nlohmann::json j{{"seed", cfg.seed},
                   {"datasets", cfg.datasets},
                   {"mrs", mrs},
                   {"faults", cfg.faults},
                   {"external", cfg.external},
                   {"equivalence_probes", cfg.equivalence_probes},
                   {"has_intercept", cfg.gen.has_intercept},
                   {"d_range", {cfg.gen.d_range.lo, cfg.gen.d_range.hi}},
                   {"n_range", {cfg.gen.n_range.lo, cfg.gen.n_range.hi}},
                   {"value_bound", cfg.gen.value_bound},
                   {"snr", cfg.gen.snr}};
  j["safety_factor"] = cfg.bounds.safety_factor ? nlohmann::json(*cfg.bounds.safety_factor) : nlohmann::json("10*(n+d+1)");
  return j;
}

/// Full verdict log. Contains no timing data, so identical configs give
/// byte-identical dumps.
inline nlohmann::json verdict_log_json(const CampaignReport& r) {
  auto verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts)
    verdicts.push_back({{"sut", v.sut},
                        {"dataset", v.dataset},
                        {"mr", to_string(v.mr)},
                        {"verdict", to_string(v.verdict.kind)},
                        {"discrepancy_sq", v.verdict.discrepancy_sq},
                        {"tolerance_sq", v.verdict.tolerance_sq},
                        {"detail", v.verdict.detail},
                        {"spec", v.spec}});
  auto r2 = nlohmann::json::array();
  for (const auto& x : r.r2)
    r2.push_back({{"sut", x.sut},
                  {"dataset", x.dataset},
                  {"first", to_string(x.first)},
                  {"second", to_string(x.second)},
                  {"failed", x.failed()}});
  auto eq = nlohmann::json::array();
  for (const auto& e : r.equivalence) {
    nlohmann::json je{{"fault", e.fault_id}, {"equivalent", e.equivalent}, {"probes_used", e.probes_used}};
    je["first_difference"] = e.first_difference ? nlohmann::json(*e.first_difference) : nlohmann::json(nullptr);
    eq.push_back(je);
  }
  return {{"config", config_json(r.config)}, {"equivalence", eq}, {"verdicts", verdicts}, {"r2", r2}, {"interrupted", r.interrupted}};
}

inline nlohmann::json summary_json(const CampaignReport& r) {
  nlohmann::json per_mr = nlohmann::json::object();
  for (auto mr : r.config.mrs) {
    auto j = detail::tally_json(r.mr_tally(mr));
    per_mr[to_string(mr)] = j;
  }
  nlohmann::json per_pair = nlohmann::json::array();
  for (const auto& [key, t] : r.tallies()) {
    auto j = detail::tally_json(t);
    j["sut"] = key.first;
    j["mr"] = to_string(key.second);
    per_pair.push_back(j);
  }
  nlohmann::json per_category = nlohmann::json::object();
  for (auto c : all_fault_categories) {
    if (std::none_of(r.suts.begin(), r.suts.end(), [&](const SutInfo& s) { return s.category == c; })) continue;
    nlohmann::json row = nlohmann::json::object();
    for (auto mr : r.config.mrs) {
      const auto t = r.category_tally(c, mr);
      row[to_string(mr)] = t.survived() ? nlohmann::json(ratio_of_violation(t)) : nlohmann::json(nullptr);
    }
    const auto all = r.category_tally(c);
    row["all"] = all.survived() ? nlohmann::json(ratio_of_violation(all)) : nlohmann::json(nullptr);
    per_category[to_string(c)] = row;
  }
  nlohmann::json mt_extended = nlohmann::json::object();
  for (auto mr : r.config.mrs) mt_extended[to_string(mr)] = detail::optional_json(r.mt_extended_for(mr));
  return {{"config", config_json(r.config)},
          {"suts", r.suts.size()},
          {"per_mr", per_mr},
          {"per_pair", per_pair},
          {"per_category", per_category},
          {"mt_extended", mt_extended},
          {"mt_extended_median", detail::optional_json(r.median_mt_extended())},
          {"rt_baseline", detail::optional_json(r.rt_extended())},
          {"interrupted", r.interrupted},
          {"wall_seconds", r.wall_seconds}};
}

inline std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << *v * 100.0 << '%';
  return os.str();
}

inline std::string text_report(const CampaignReport& r) {
  std::ostringstream os;
  os << "SUTs: " << r.suts.size() << "   datasets: " << r.config.datasets << "   seed: " << r.config.seed
     << (r.interrupted ? "   (interrupted)" : "") << "\n\n";
  os << std::left << std::setw(8) << "MR" << std::right << std::setw(10) << "survived" << std::setw(10) << "violated"
     << std::setw(10) << "src-fail" << std::setw(10) << "fu-fail" << std::setw(12) << "violation" << std::setw(12)
     << "extended" << '\n';
  for (auto mr : r.config.mrs) {
    const auto t = r.mr_tally(mr);
    os << std::left << std::setw(8) << to_string(mr) << std::right << std::setw(10) << t.survived() << std::setw(10)
       << t.violated << std::setw(10) << t.source_failed << std::setw(10) << t.followup_failed << std::setw(12)
       << percent(r.ratio_of_violation_for(mr)) << std::setw(12) << percent(r.mt_extended_for(mr)) << '\n';
  }
  os << "\nMT extended ratio (median over MRs): " << percent(r.median_mt_extended()) << '\n';
  os << "R2 extended ratio:                   " << percent(r.rt_extended()) << '\n';

  bool header = false;
  for (auto c : all_fault_categories) {
    if (std::none_of(r.suts.begin(), r.suts.end(), [&](const SutInfo& s) { return s.category == c; })) continue;
    if (!header) {
      os << "\nRatio of violation by category\n" << std::left << std::setw(20) << "category";
      for (auto mr : r.config.mrs) os << std::right << std::setw(9) << to_string(mr);
      os << std::setw(9) << "all" << '\n';
      header = true;
    }
    os << std::left << std::setw(20) << to_string(c);
    for (auto mr : r.config.mrs) {
      const auto t = r.category_tally(c, mr);
      os << std::right << std::setw(9) << (t.survived() ? percent(ratio_of_violation(t)) : "n/a");
    }
    const auto all = r.category_tally(c);
    os << std::right << std::setw(9) << (all.survived() ? percent(ratio_of_violation(all)) : "n/a") << '\n';
  }
  return os.str();
}

/// verdicts.json, report.json, report.txt and zoo.json under `dir`.
inline void write_reports(const CampaignReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto dump = [&](const std::filesystem::path& name, const std::string& text) {
    std::ofstream os(dir / name);
    if (!os) throw HarnessIoError("cannot write " + (dir / name).string());
    os << text;
  };
  dump("verdicts.json", verdict_log_json(r).dump(1) + "\n");
  dump("report.json", summary_json(r).dump(2) + "\n");
  dump("report.txt", text_report(r));
  dump("zoo.json", catalog_json().dump(2) + "\n");
}

}  // namespace mtlr
