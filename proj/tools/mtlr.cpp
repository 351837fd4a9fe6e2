// mtlr: command-line front end.
//
//   mtlr gen --seed 3 --out ds.csv
//   mtlr fit ds.csv                       # coefficients on stdout, one line
//   mtlr mr ds.csv --mr MR5.2 --fault column-order
//   mtlr campaign --faults all --datasets 100 --out results/
//   mtlr compare-rt --faults all
//
// Exit status: 0 ran clean, 1 violations or failures found, 2 harness error.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mtlr/mtlr.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop = true; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::vector<mtlr::MrId> parse_mrs(const std::string& s) {
  if (s.empty() || s == "all") return {mtlr::all_mrs.begin(), mtlr::all_mrs.end()};
  std::vector<mtlr::MrId> out;
  for (const auto& tok : split_list(s)) {
    const auto mr = mtlr::parse_mr(tok);
    if (!mr) throw mtlr::InvalidArgument("unknown relation '" + tok + "'");
    out.push_back(*mr);
  }
  return out;
}

std::vector<std::string> parse_faults(const std::string& s) {
  if (s == "all") {
    std::vector<std::string> out;
    for (const auto& f : mtlr::catalog()) out.push_back(f.id);
    return out;
  }
  auto out = split_list(s);
  for (const auto& id : out)
    if (id != mtlr::reference_id) (void)mtlr::find_fault(id);
  return out;
}

struct CampaignOptions {
  std::uint64_t seed = 1;
  std::size_t datasets = 100;
  std::string mrs = "all";
  std::string faults;
  std::vector<std::string> suts;
  std::string out;
  std::optional<double> safety_factor;
  std::string config;
  std::size_t workers = 0;
  bool constrained = false;
  std::size_t equiv_probes = 0;
  std::optional<double> timeout_factor;
};

void add_campaign_options(CLI::App* cmd, CampaignOptions& o) {
  cmd->add_option("--seed", o.seed, "campaign seed");
  cmd->add_option("--datasets", o.datasets, "source datasets per SUT")->check(CLI::PositiveNumber);
  cmd->add_option("--mrs", o.mrs, "comma-separated relations, or 'all'");
  cmd->add_option("--faults", o.faults, "comma-separated fault ids, 'reference', or 'all'");
  cmd->add_option("--sut", o.suts, "external SUT command (repeatable); dataset path is appended");
  cmd->add_option("--out", o.out, "directory for verdicts.json, report.json, report.txt, zoo.json");
  cmd->add_option("--safety-factor", o.safety_factor, "constant c in the forward-error bound");
  cmd->add_option("--config", o.config, "JSON config; reads error_bound.safety_factor");
  cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");
  cmd->add_flag("--constrained", o.constrained, "generate constrained-form (no intercept) datasets");
  cmd->add_option("--equiv-probes", o.equiv_probes, "drop faults equivalent to the reference on N probes");
  cmd->add_option("--timeout-factor", o.timeout_factor, "deadline multiple of the calibrated baseline");
}

mtlr::CampaignConfig to_config(const CampaignOptions& o) {
  mtlr::CampaignConfig cfg;
  if (!o.config.empty()) {
    std::ifstream is(o.config);
    if (!is) throw mtlr::HarnessIoError("cannot open config " + o.config);
    const auto j = nlohmann::json::parse(is);
    if (j.contains("error_bound") && j["error_bound"].contains("safety_factor"))
      cfg.bounds.safety_factor = j["error_bound"]["safety_factor"].get<double>();
  }
  if (o.safety_factor) cfg.bounds.safety_factor = o.safety_factor;
  cfg.seed = o.seed;
  cfg.datasets = o.datasets;
  cfg.mrs = parse_mrs(o.mrs);
  cfg.faults = parse_faults(o.faults);
  cfg.external = o.suts;
  if (cfg.faults.empty() && cfg.external.empty()) cfg.faults = {std::string(mtlr::reference_id)};
  cfg.workers = o.workers;
  cfg.gen.has_intercept = !o.constrained;
  cfg.equivalence_probes = o.equiv_probes;
  cfg.timeout_factor = o.timeout_factor;
  return cfg;
}

bool found_failures(const mtlr::CampaignReport& r) {
  for (const auto& v : r.verdicts)
    if (v.verdict.kind != mtlr::VerdictKind::satisfied && v.verdict.kind != mtlr::VerdictKind::inapplicable) return true;
  return false;
}

int run_campaign_command(const CampaignOptions& o, bool rt_summary) {
  const auto cfg = to_config(o);
  std::signal(SIGINT, on_sigint);
  const auto report = mtlr::run_campaign(cfg, &g_stop);
  if (!o.out.empty()) mtlr::write_reports(report, o.out);
  if (rt_summary) {
    const auto mt = report.median_mt_extended();
    const auto rt = report.rt_extended();
    std::cout << "MT extended ratio (median over MRs): " << mtlr::percent(mt) << '\n'
              << "R2 extended ratio:                   " << mtlr::percent(rt) << '\n'
              << "MT > R2: " << ((mt && rt && *mt > *rt) ? "yes" : "no") << '\n';
  } else {
    std::cout << mtlr::text_report(report);
  }
  if (report.interrupted) std::cerr << "interrupted; partial results written\n";
  return found_failures(report) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metamorphic testing for multiple linear regression"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a dataset (CSV plus JSON sidecar)");
  mtlr::GenSpec spec;
  std::string gen_out;
  bool gen_constrained = false;
  gen->add_option("--seed", spec.seed);
  gen->add_option("--d-min", spec.d_range.lo);
  gen->add_option("--d-max", spec.d_range.hi);
  gen->add_option("--n-min", spec.n_range.lo);
  gen->add_option("--n-max", spec.n_range.hi);
  gen->add_option("--bound", spec.value_bound, "value bound B");
  gen->add_option("--snr", spec.snr, "response noise ratio r");
  gen->add_flag("--constrained", gen_constrained, "no intercept");
  gen->add_option("--out", gen_out, "CSV path; stdout when omitted");

  auto* fitc = app.add_subcommand("fit", "fit a CSV dataset and print the coefficients");
  std::string fit_csv, fit_fault;
  bool fit_constrained = false, fit_bound = false;
  fitc->add_option("csv", fit_csv)->required();
  fitc->add_option("--fault", fit_fault, "inject a zoo fault");
  fitc->add_flag("--no-intercept", fit_constrained, "constrained form (overrides the sidecar)");
  fitc->add_flag("--bound", fit_bound, "also print the forward-error bound on stderr");

  auto* mrc = app.add_subcommand("mr", "run one metamorphic test group");
  std::string mr_csv, mr_name, mr_fault, mr_sut;
  std::uint64_t mr_seed = 1;
  std::optional<double> mr_safety;
  mrc->add_option("csv", mr_csv)->required();
  mrc->add_option("--mr", mr_name)->required();
  mrc->add_option("--seed", mr_seed);
  mrc->add_option("--fault", mr_fault);
  mrc->add_option("--sut", mr_sut, "external SUT command");
  mrc->add_option("--safety-factor", mr_safety);

  CampaignOptions camp, cmp;
  auto* campc = app.add_subcommand("campaign", "run a campaign over SUTs x datasets x MRs");
  add_campaign_options(campc, camp);
  auto* cmpc = app.add_subcommand("compare-rt", "compare MT and R2 extended ratios");
  add_campaign_options(cmpc, cmp);
  app.add_subcommand("zoo", "print the fault catalog");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      spec.has_intercept = !gen_constrained;
      const auto g = mtlr::generate(spec);
      if (gen_out.empty())
        mtlr::write_csv(std::cout, g.ds);
      else
        mtlr::write_generated(gen_out, g);
      return 0;
    }
    if (fitc->parsed()) {
      std::optional<bool> intercept;
      if (fit_constrained) intercept = false;
      const auto ds = mtlr::read_dataset(fit_csv, intercept);
      const auto fault = fit_fault.empty() ? mtlr::Fault::none : mtlr::find_fault(fit_fault).fault;
      const auto coefs = mtlr::solve_coefficients(ds, fault);
      for (std::size_t i = 0; i < coefs.size(); ++i) std::cout << (i ? " " : "") << mtlr::format_double(coefs[i]);
      std::cout << '\n';
      if (fit_bound) std::cerr << "delta_norm " << mtlr::fit(ds).delta_norm() << '\n';
      return 0;
    }
    if (mrc->parsed()) {
      const auto ds = mtlr::read_dataset(mr_csv);
      const auto mr = mtlr::parse_mr(mr_name);
      if (!mr) throw mtlr::InvalidArgument("unknown relation '" + mr_name + "'");
      mtlr::SutHandle sut = mtlr::reference_sut();
      if (!mr_sut.empty())
        sut = mtlr::external_sut(mtlr::split_command(mr_sut));
      else if (!mr_fault.empty())
        sut = mtlr::instantiate(mtlr::find_fault(mr_fault));
      mtlr::calibrate(sut, ds);
      mtlr::Rng rng(mr_seed);
      mtlr::BoundConfig bounds{mr_safety};
      const auto transform = mtlr::draw_transform(*mr, ds, rng);
      const auto run = mtlr::run_mtg(sut, *mr, ds, transform, bounds);
      nlohmann::json j{{"sut", sut.name},
                       {"mr", mtlr::to_string(*mr)},
                       {"verdict", mtlr::to_string(run.verdict.kind)},
                       {"discrepancy_sq", run.verdict.discrepancy_sq},
                       {"tolerance_sq", run.verdict.tolerance_sq},
                       {"detail", run.verdict.detail},
                       {"spec", mtlr::to_json(run.mtg ? run.mtg->spec : transform)}};
      std::cout << j.dump(2) << '\n';
      return run.verdict.kind == mtlr::VerdictKind::satisfied || run.verdict.kind == mtlr::VerdictKind::inapplicable ? 0 : 1;
    }
    if (campc->parsed()) return run_campaign_command(camp, false);
    if (cmpc->parsed()) return run_campaign_command(cmp, true);
    std::cout << mtlr::catalog_json().dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "mtlr: " << e.what() << '\n';
    return 2;
  }
}
