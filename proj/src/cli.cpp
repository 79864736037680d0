#include "smartpower/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smartpower/calibration.hpp"
#include "smartpower/config.hpp"
#include "smartpower/errors.hpp"
#include "smartpower/gee.hpp"
#include "smartpower/io.hpp"
#include "smartpower/version.hpp"

namespace smartpower {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int m = 0;
  bool full = false;
  int threads = 0;
};

struct StageTimer {
  std::vector<std::pair<std::string, double>> timings;
  Clock::time_point mark = Clock::now();

  void stage(const std::string& name) {
    const auto now = Clock::now();
    timings.emplace_back(name,
                         std::chrono::duration<double>(now - mark).count());
    mark = now;
  }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--preset", o.preset_name, "built-in scenario name");
  cmd->add_option("--out", o.out_dir, "output directory")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed override")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--m", o.m, "Monte Carlo replicate override");
  cmd->add_flag("--full", o.full, "full scale: m = 5000");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

StudyConfig load_study(const CommonOpts& o, bool need_source = true) {
  if (o.config_path.empty() && o.preset_name.empty()) {
    if (need_source)
      throw ConfigError("provide one of --config PATH or --preset NAME");
  }
  if (!o.config_path.empty() && !o.preset_name.empty())
    throw ConfigError("--config and --preset are mutually exclusive");
  StudyConfig cfg = o.config_path.empty() ? preset(o.preset_name)
                                          : parse_config_file(o.config_path);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.m > 0) cfg.m = o.m;
  if (o.full) cfg.m = 5000;
  return cfg;
}

std::string out_path(const CommonOpts& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return (fs::path(o.out_dir) / name).string();
}

void print_echo(const StudyConfig& cfg) {
  const DerivedEcho echo = derive_echo(cfg);
  std::printf("responder rates      p = %.6f (arm +1), q = %.6f (arm -1)\n",
              echo.p, echo.q);
  std::printf("true contrast        delta = %.6f\n", echo.delta_true);
  std::printf("dispersion grid      (sequence, occasion, mean, dispersion)\n");
  for (const auto& [label, j, mean, zeta] : echo.cells)
    std::printf("  %-10s t%d  mean %-8.4f dispersion %.4f\n", label.c_str(), j,
                mean, zeta);
  for (const auto& w : cfg.warnings)
    std::printf("warning: %s\n", w.c_str());
}

void finish_manifest(const CommonOpts& o, const StudyConfig& cfg,
                     const std::string& command, StageTimer& timer) {
  RunManifest manifest;
  manifest.version = kVersion;
  manifest.command = command;
  manifest.resolved_config_json = serialize_config(cfg);
  manifest.config_hash = fnv1a_hex(manifest.resolved_config_json);
  manifest.master_seed = cfg.seed;
  manifest.timings = timer.timings;
  manifest.warnings = cfg.warnings;
  write_manifest(out_path(o, "manifest.json"), manifest);
}

int cmd_power(const CommonOpts& o, std::optional<int> n_single,
              std::optional<double> target_override) {
  StageTimer timer;
  StudyConfig cfg = load_study(o);
  if (target_override) cfg.power_target = target_override;
  print_echo(cfg);
  const PowerConfig pc = make_power_config(cfg);
  std::vector<int> n_grid = cfg.n_grid;
  if (n_single) n_grid = {*n_single};
  if (n_grid.empty())
    throw ConfigError("no sample sizes: set monte_carlo.n_grid or pass --n");
  timer.stage("setup");

  int exit_code = 0;
  if (cfg.power_target) {
    const SampleSizeResult res =
        find_sample_size(pc, *cfg.power_target, n_grid, o.threads);
    write_power_csv(out_path(o, "power.csv"), res.curve);
    for (const auto& pt : res.curve)
      std::printf("n %5d   power %.4f   mc_se %.4f   failed %d\n", pt.n,
                  pt.power, pt.mc_se, pt.failed);
    if (res.n) {
      std::printf("smallest n on grid reaching power %.3f: %d\n",
                  *cfg.power_target, *res.n);
    } else {
      std::printf("power target %.3f not achieved on the grid\n",
                  *cfg.power_target);
      exit_code = 4;
    }
  } else {
    const auto curve = power_curve(pc, n_grid, o.threads);
    write_power_csv(out_path(o, "power.csv"), curve);
    for (const auto& pt : curve)
      std::printf("n %5d   power %.4f   mc_se %.4f   failed %d\n", pt.n,
                  pt.power, pt.mc_se, pt.failed);
  }
  timer.stage("power");
  finish_manifest(o, cfg, "power", timer);
  return exit_code;
}

int cmd_calibrate(const CommonOpts& o, std::optional<double> target_override) {
  StageTimer timer;
  StudyConfig cfg = load_study(o);
  const std::optional<double> target =
      target_override ? target_override : cfg.target_tau_max;
  if (!target)
    throw ConfigError(
        "calibration target missing: set dependence.target_tau_max or pass "
        "--target");
  const EtsGrid grid = resolve_grid(cfg);
  timer.stage("setup");
  const CalibrationTable table =
      calibrate_rho(*target, cfg.design, grid, cfg.structure, cfg.eta,
                    cfg.cal_step, cfg.cal_m, cfg.cal_n_star, cfg.seed,
                    o.threads);
  timer.stage("calibrate");
  write_calibration_csv(out_path(o, "calibration.csv"), table);
  for (const auto& pt : table.points)
    std::printf("rho %.3f   tau_hat %.4f   mc_se %.4f\n", pt.rho, pt.tau_hat,
                pt.mc_se);
  std::printf("selected rho = %.3f for target tau %.3f\n", table.selected_rho,
              *target);
  finish_manifest(o, cfg, "calibrate", timer);
  return 0;
}

int cmd_simulate(const CommonOpts& o, int n) {
  StageTimer timer;
  StudyConfig cfg = load_study(o);
  print_echo(cfg);
  const PowerConfig pc = make_power_config(cfg);
  const double p = implied_responder_rate(pc, +1);
  const double q = implied_responder_rate(pc, -1);
  const SubgroupSizes sizes = subgroup_sizes(n, p, q, pc.n4_override);
  const GenContext ctx = prepare_generator(sizes, pc.design, pc.grid, pc.dep);
  const RngStream stream{
      derive_seed(pc.master_seed, static_cast<std::uint64_t>(n), 0)};
  const PotentialOutcomes pot = generate_potential_outcomes(ctx, stream);
  const ObservedTrial trial = randomize_and_observe(pot, pc.design, stream);
  timer.stage("simulate");
  write_observed_trial_csv(out_path(o, "trial.csv"), trial);
  std::printf("wrote %zu individuals to %s\n", trial.rows.size(),
              out_path(o, "trial.csv").c_str());
  finish_manifest(o, cfg, "simulate", timer);
  return 0;
}

int cmd_analyze(const CommonOpts& o, const std::string& data_path) {
  StageTimer timer;
  StudyConfig cfg = load_study(o);
  const ObservedTrial trial = read_observed_trial_csv(data_path);
  if (trial.T != cfg.design.T)
    throw ConfigError("dataset has " + std::to_string(trial.T) +
                      " occasions but the design expects " +
                      std::to_string(cfg.design.T));
  timer.stage("load");
  const auto rows = build_weighted_replicated_dataset(trial, cfg.design);
  const GeeFit fit = fit_gee(rows, cfg.design);
  const TestResult res = z_test(fit.beta, fit.cov, cfg.pair,
                                resolve_weights(cfg), cfg.design, cfg.alpha);
  timer.stage("fit");
  {
    CsvWriter csv(out_path(o, "analysis.csv"),
                  {"delta_hat", "var_hat", "z", "p_value", "reject"});
    csv.row({CsvWriter::num(res.delta), CsvWriter::num(res.var),
             CsvWriter::num(res.z), CsvWriter::num(res.p_value),
             res.reject ? "1" : "0"});
  }
  std::printf("delta_hat %.6f   var %.6f   z %.4f   p %.6f   reject %d\n",
              res.delta, res.var, res.z, res.p_value, res.reject ? 1 : 0);
  finish_manifest(o, cfg, "analyze", timer);
  return 0;
}

StudyConfig study_preset(const CommonOpts& o, const std::string& name) {
  CommonOpts local = o;
  local.config_path.clear();
  local.preset_name = name;
  return load_study(local);
}

int cmd_replicate(const CommonOpts& o, int study, int scenario) {
  StageTimer timer;
  switch (study) {
    case 1: {
      // Power ladder: both estimands across all effect scenarios.
      StudyConfig last;
      CsvWriter csv(out_path(o, "study1_power.csv"),
                    {"scenario", "estimand", "n", "power", "mc_se", "failed"});
      for (const char* estimand : {"end_of_study", "auc"}) {
        for (int k = 1; k <= 10; ++k) {
          StudyConfig cfg =
              study_preset(o, "table3-scenario-" + std::to_string(k));
          cfg.estimand = std::string(estimand) == "auc"
                             ? ContrastWeights::Kind::Auc
                             : ContrastWeights::Kind::EndOfStudy;
          const auto curve =
              power_curve(make_power_config(cfg), cfg.n_grid, o.threads);
          for (const auto& pt : curve)
            csv.row({std::to_string(k), estimand, std::to_string(pt.n),
                     CsvWriter::num(pt.power), CsvWriter::num(pt.mc_se),
                     std::to_string(pt.failed)});
          last = cfg;
        }
      }
      timer.stage("study1");
      finish_manifest(o, last, "replicate-study 1", timer);
      return 0;
    }
    case 2: {
      // Dependence calibration table plus per-path correlation matrices.
      StudyConfig base = study_preset(o, "table3-scenario-10");
      const EtsGrid base_grid = resolve_grid(base);
      CsvWriter csv(out_path(o, "study2_calibration.csv"),
                    {"structure", "rho", "tau_hat", "mc_se"});
      for (const auto structure :
           {CorrStructure::Exchangeable, CorrStructure::AR1}) {
        for (const double rho : {0.2, 0.4, 0.6}) {
          const TauEstimate est = estimate_tau_max(
              base.design, base_grid, DependenceSpec::make(structure, rho),
              base.cal_m, base.cal_n_star, base.seed, o.threads);
          csv.row({structure == CorrStructure::AR1 ? "ar1" : "exchangeable",
                   CsvWriter::num(rho), CsvWriter::num(est.mean),
                   CsvWriter::num(est.mc_se)});
        }
      }
      timer.stage("calibration-table");
      StudyConfig heavy = study_preset(o, "table3-scenario-10");
      heavy.structure = CorrStructure::AR1;
      const PathCorrelations pc = empirical_path_correlations(
          heavy.design, resolve_grid(heavy),
          DependenceSpec::make(CorrStructure::AR1, 0.6), heavy.cal_m,
          heavy.cal_n_star, heavy.seed, o.threads);
      write_path_correlations_csv(out_path(o, "study2_path_corr.csv"), pc);
      timer.stage("path-correlations");
      finish_manifest(o, base, "replicate-study 2", timer);
      return 0;
    }
    case 3: {
      // Null rejection rates across the three dispersion scenarios.
      StudyConfig last;
      CsvWriter csv(out_path(o, "study3_type1.csv"),
                    {"scenario", "estimand", "n", "rejection", "mc_se",
                     "failed"});
      for (int s = 1; s <= 3; ++s) {
        for (const char* estimand : {"end_of_study", "auc"}) {
          StudyConfig cfg =
              study_preset(o, "webtable6-scenario-" + std::to_string(s));
          cfg.estimand = std::string(estimand) == "auc"
                             ? ContrastWeights::Kind::Auc
                             : ContrastWeights::Kind::EndOfStudy;
          const auto curve =
              power_curve(make_power_config(cfg), cfg.n_grid, o.threads);
          for (const auto& pt : curve)
            csv.row({std::to_string(s), estimand, std::to_string(pt.n),
                     CsvWriter::num(pt.power), CsvWriter::num(pt.mc_se),
                     std::to_string(pt.failed)});
          last = cfg;
        }
      }
      timer.stage("study3");
      finish_manifest(o, last, "replicate-study 3", timer);
      return 0;
    }
    case 4: {
      // Robustness to the cross-path latent correlation. The eta grid only
      // stays positive definite under AR1 at rho = 0.6 (exchangeable needs
      // eta near rho), so the sweep fixes the AR1 structure.
      StudyConfig cfg =
          study_preset(o, "table3-scenario-" + std::to_string(scenario));
      cfg.structure = CorrStructure::AR1;
      std::vector<double> etas;
      for (int i = 0; i <= 9; ++i) etas.push_back(0.05 * i);
      const auto points = sensitivity_sweep(make_power_config(cfg),
                                            SweepAxis::Eta, etas, 500,
                                            o.threads);
      write_sweep_csv(out_path(o, "study4_eta.csv"), "eta", points);
      timer.stage("study4");
      finish_manifest(o, cfg, "replicate-study 4", timer);
      return 0;
    }
    case 5: {
      // Robustness to the never-responder subgroup size.
      StudyConfig cfg =
          study_preset(o, "table3-scenario-" + std::to_string(scenario));
      const std::vector<double> n4 = {100, 150, 200, 250, 300};
      const auto points = sensitivity_sweep(make_power_config(cfg),
                                            SweepAxis::N4, n4, 500, o.threads);
      write_sweep_csv(out_path(o, "study5_n4.csv"), "n4", points);
      timer.stage("study5");
      finish_manifest(o, cfg, "replicate-study 5", timer);
      return 0;
    }
  }
  throw ConfigError("replicate-study index must be 1..5");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Monte Carlo power and sample size for two-stage restricted "
               "SMART designs with longitudinal count outcomes"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto* power = app.add_subcommand("power", "estimate power over sample sizes");
  add_common(power, opts);
  std::optional<int> n_single;
  power->add_option("--n", n_single, "single total sample size");
  std::optional<double> power_target;
  power->add_option("--target", power_target, "sample size search target");

  auto* calibrate =
      app.add_subcommand("calibrate", "map a count-scale correlation target "
                                      "to the latent rho");
  add_common(calibrate, opts);
  std::optional<double> tau_target;
  calibrate->add_option("--target", tau_target, "target max pairwise "
                                                "count correlation");

  auto* simulate = app.add_subcommand("simulate", "write one observed trial");
  add_common(simulate, opts);
  int sim_n = 0;
  simulate->add_option("--n", sim_n, "total sample size")->required();

  auto* analyze = app.add_subcommand("analyze", "fit and test a dataset");
  add_common(analyze, opts);
  std::string data_path;
  analyze->add_option("--data", data_path, "trial CSV path")->required();

  auto* replicate = app.add_subcommand(
      "replicate-study", "run a packaged simulation study (1..5)");
  add_common(replicate, opts);
  int study = 0;
  replicate->add_option("study", study, "study index 1..5")->required();
  int scenario = 5;
  replicate->add_option("--scenario", scenario,
                        "effect scenario for studies 4 and 5")
      ->capture_default_str();

  auto* presets_cmd =
      app.add_subcommand("presets", "list built-in scenario names");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (presets_cmd->parsed()) {
      for (const auto& name : preset_names()) std::printf("%s\n", name.c_str());
      return 0;
    }
    if (power->parsed()) return cmd_power(opts, n_single, power_target);
    if (calibrate->parsed()) return cmd_calibrate(opts, tau_target);
    if (simulate->parsed()) return cmd_simulate(opts, sim_n);
    if (analyze->parsed()) return cmd_analyze(opts, data_path);
    if (replicate->parsed()) return cmd_replicate(opts, study, scenario);
  } catch (const UnreachableTargetError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace smartpower
