#include "smartpower/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smartpower/errors.hpp"

namespace smartpower {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const ordered_json& require(const ordered_json& obj, const std::string& key,
                            const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required field");
  return *it;
}

double as_double(const ordered_json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const ordered_json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::vector<std::string> grid_labels(const TrialDesign& design) {
  std::vector<std::string> labels = {"(.)", "(+1)", "(-1)"};
  (void)design;
  for (const auto& e : stage2_sequences()) labels.push_back(e.label());
  return labels;
}

size_t cells_for_label(size_t label_idx, const TrialDesign& design) {
  if (label_idx == 0) return 1;
  if (label_idx <= 2) return static_cast<size_t>(design.K - 1);
  return static_cast<size_t>(design.T - design.K);
}

ResponseRule parse_rule(const ordered_json& v, const std::string& path) {
  const std::string kind =
      require(v, "kind", path).get<std::string>();
  ResponseRule rule;
  if (kind == "at_most") {
    rule = ResponseRule::at_most(as_int(require(v, "c", path), path + ".c"));
  } else if (kind == "greater_than") {
    rule =
        ResponseRule::greater_than(as_int(require(v, "c", path), path + ".c"));
  } else if (kind == "interval") {
    rule = ResponseRule::interval(as_int(require(v, "lo", path), path + ".lo"),
                                  as_int(require(v, "hi", path), path + ".hi"));
  } else {
    fail(path + ".kind", "unknown response rule kind '" + kind + "'");
  }
  try {
    rule.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return rule;
}

Edtr parse_edtr(const ordered_json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) fail(path, "expected [a1, a2]");
  Edtr e{as_int(v[0], path + "[0]"), as_int(v[1], path + "[1]")};
  if ((e.a1 != 1 && e.a1 != -1) || (e.a2 != 1 && e.a2 != -1))
    fail(path, "arms must be +1 or -1");
  return e;
}

}  // namespace

StudyConfig parse_config_text(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  StudyConfig cfg;

  const auto& design = require(doc, "design", "config");
  cfg.design.T = as_int(require(design, "T", "design"), "design.T");
  cfg.design.K = as_int(require(design, "K", "design"), "design.K");
  if (design.contains("times")) {
    for (size_t i = 0; i < design["times"].size(); ++i)
      cfg.design.times.push_back(
          as_double(design["times"][i], "design.times[" + std::to_string(i) + "]"));
  } else {
    for (int j = 1; j <= cfg.design.T; ++j) cfg.design.times.push_back(j);
  }
  cfg.design.rule = parse_rule(require(design, "response_rule", "design"),
                               "design.response_rule");
  if (design.contains("p_a1"))
    cfg.design.p_a1 = as_double(design["p_a1"], "design.p_a1");
  if (design.contains("p_a2"))
    cfg.design.p_a2 = as_double(design["p_a2"], "design.p_a2");
  try {
    cfg.design.validate();
  } catch (const std::exception& e) {
    fail("design", e.what());
  }

  const auto& grid = require(doc, "grid", "config");
  const auto labels = grid_labels(cfg.design);
  for (size_t li = 0; li < labels.size(); ++li) {
    const std::string path = "grid." + labels[li];
    if (!grid.contains(labels[li])) fail(path, "missing sequence");
    const auto& arr = grid[labels[li]];
    if (!arr.is_array() || arr.size() != cells_for_label(li, cfg.design)) {
      std::ostringstream msg;
      msg << "expected " << cells_for_label(li, cfg.design)
          << " cells for this sequence";
      fail(path, msg.str());
    }
    std::vector<GridCellSpec> cells;
    for (size_t ci = 0; ci < arr.size(); ++ci) {
      const std::string cpath = path + "[" + std::to_string(ci) + "]";
      const auto& cell = arr[ci];
      GridCellSpec spec;
      spec.mean = as_double(require(cell, "mean", cpath), cpath + ".mean");
      const bool has_disp = cell.contains("dispersion");
      const bool has_zero = cell.contains("zero_proportion");
      if (has_disp == has_zero)
        fail(cpath, "exactly one of dispersion | zero_proportion required");
      if (has_disp)
        spec.dispersion = as_double(cell["dispersion"], cpath + ".dispersion");
      else
        spec.zero_proportion =
            as_double(cell["zero_proportion"], cpath + ".zero_proportion");
      cells.push_back(spec);
    }
    cfg.grid_spec.emplace_back(labels[li], std::move(cells));
  }
  for (const auto& key : grid.items())
    if (std::find(labels.begin(), labels.end(), key.key()) == labels.end())
      fail("grid." + key.key(), "unknown sequence label");

  const auto& dep = require(doc, "dependence", "config");
  const std::string structure =
      require(dep, "structure", "dependence").get<std::string>();
  if (structure == "ar1")
    cfg.structure = CorrStructure::AR1;
  else if (structure == "exchangeable")
    cfg.structure = CorrStructure::Exchangeable;
  else
    fail("dependence.structure", "must be 'ar1' or 'exchangeable'");
  if (dep.contains("rho")) cfg.rho = as_double(dep["rho"], "dependence.rho");
  if (dep.contains("target_tau_max"))
    cfg.target_tau_max =
        as_double(dep["target_tau_max"], "dependence.target_tau_max");
  if (dep.contains("eta")) cfg.eta = as_double(dep["eta"], "dependence.eta");
  if (cfg.rho.has_value() == cfg.target_tau_max.has_value())
    fail("dependence", "exactly one of rho | target_tau_max required");

  const auto& analysis = require(doc, "analysis", "config");
  const auto& pair = require(analysis, "pair", "analysis");
  if (!pair.is_array() || pair.size() != 2)
    fail("analysis.pair", "expected two regimens");
  cfg.pair.first = parse_edtr(pair[0], "analysis.pair[0]");
  cfg.pair.second = parse_edtr(pair[1], "analysis.pair[1]");
  const auto& estimand = require(analysis, "estimand", "analysis");
  if (estimand.is_string()) {
    const std::string s = estimand.get<std::string>();
    if (s == "end_of_study")
      cfg.estimand = ContrastWeights::Kind::EndOfStudy;
    else if (s == "auc")
      cfg.estimand = ContrastWeights::Kind::Auc;
    else
      fail("analysis.estimand", "must be 'end_of_study', 'auc', or {custom}");
  } else if (estimand.is_object() && estimand.contains("custom")) {
    cfg.estimand = ContrastWeights::Kind::Custom;
    for (size_t i = 0; i < estimand["custom"].size(); ++i)
      cfg.custom_weights.push_back(
          as_double(estimand["custom"][i],
                    "analysis.estimand.custom[" + std::to_string(i) + "]"));
    if (static_cast<int>(cfg.custom_weights.size()) != cfg.design.T)
      fail("analysis.estimand.custom", "length must equal design.T");
  } else {
    fail("analysis.estimand", "must be 'end_of_study', 'auc', or {custom}");
  }
  if (analysis.contains("alpha"))
    cfg.alpha = as_double(analysis["alpha"], "analysis.alpha");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    fail("analysis.alpha", "must lie in (0, 1)");

  const auto& mc = require(doc, "monte_carlo", "config");
  cfg.m = as_int(require(mc, "m", "monte_carlo"), "monte_carlo.m");
  if (cfg.m < 1) fail("monte_carlo.m", "must be positive");
  const auto& seed = require(mc, "seed", "monte_carlo");
  if (!seed.is_number_unsigned() && !seed.is_number_integer())
    fail("monte_carlo.seed", "expected an unsigned integer");
  if (seed.is_number_integer() && seed.get<long long>() < 0)
    fail("monte_carlo.seed", "must be >= 0");
  cfg.seed = seed.get<std::uint64_t>();
  if (mc.contains("n_grid")) {
    for (size_t i = 0; i < mc["n_grid"].size(); ++i) {
      const int n = as_int(mc["n_grid"][i],
                           "monte_carlo.n_grid[" + std::to_string(i) + "]");
      if (n < 1) fail("monte_carlo.n_grid", "sample sizes must be positive");
      if (!cfg.n_grid.empty() && n <= cfg.n_grid.back())
        fail("monte_carlo.n_grid", "must be strictly increasing");
      cfg.n_grid.push_back(n);
    }
  }
  if (mc.contains("n4") && !mc["n4"].is_null())
    cfg.n4_override = as_int(mc["n4"], "monte_carlo.n4");
  if (mc.contains("power_target")) {
    cfg.power_target = as_double(mc["power_target"], "monte_carlo.power_target");
    if (!(*cfg.power_target > 0.0 && *cfg.power_target < 1.0))
      fail("monte_carlo.power_target", "must lie in (0, 1)");
  }

  if (doc.contains("calibration")) {
    const auto& cal = doc["calibration"];
    if (cal.contains("step"))
      cfg.cal_step = as_double(cal["step"], "calibration.step");
    if (cal.contains("m")) cfg.cal_m = as_int(cal["m"], "calibration.m");
    if (cal.contains("n_star"))
      cfg.cal_n_star = as_int(cal["n_star"], "calibration.n_star");
    if (!(cfg.cal_step > 0.0 && cfg.cal_step < 1.0))
      fail("calibration.step", "must lie in (0, 1)");
    if (cfg.cal_m < 1 || cfg.cal_n_star < 2)
      fail("calibration", "m must be >= 1 and n_star >= 2");
  }

  if (doc.contains("warnings"))
    for (const auto& w : doc["warnings"])
      cfg.warnings.push_back(w.get<std::string>());

  resolve_grid(cfg);  // surfaces grid-level domain problems at parse time
  return cfg;
}

StudyConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const StudyConfig& cfg) {
  ordered_json doc;
  ordered_json design;
  design["T"] = cfg.design.T;
  design["K"] = cfg.design.K;
  design["times"] = cfg.design.times;
  ordered_json rule;
  switch (cfg.design.rule.kind) {
    case ResponseRule::Kind::AtMost:
      rule["kind"] = "at_most";
      rule["c"] = cfg.design.rule.c1;
      break;
    case ResponseRule::Kind::GreaterThan:
      rule["kind"] = "greater_than";
      rule["c"] = cfg.design.rule.c1;
      break;
    case ResponseRule::Kind::Interval:
      rule["kind"] = "interval";
      rule["lo"] = cfg.design.rule.c1;
      rule["hi"] = cfg.design.rule.c2;
      break;
  }
  design["response_rule"] = rule;
  design["p_a1"] = cfg.design.p_a1;
  design["p_a2"] = cfg.design.p_a2;
  doc["design"] = design;

  ordered_json grid;
  for (const auto& [label, cells] : cfg.grid_spec) {
    ordered_json arr = ordered_json::array();
    for (const auto& cell : cells) {
      ordered_json c;
      c["mean"] = cell.mean;
      if (cell.dispersion) c["dispersion"] = *cell.dispersion;
      if (cell.zero_proportion) c["zero_proportion"] = *cell.zero_proportion;
      arr.push_back(c);
    }
    grid[label] = arr;
  }
  doc["grid"] = grid;

  ordered_json dep;
  dep["structure"] =
      cfg.structure == CorrStructure::AR1 ? "ar1" : "exchangeable";
  if (cfg.rho) dep["rho"] = *cfg.rho;
  if (cfg.target_tau_max) dep["target_tau_max"] = *cfg.target_tau_max;
  if (cfg.eta) dep["eta"] = *cfg.eta;
  doc["dependence"] = dep;

  ordered_json analysis;
  analysis["pair"] = ordered_json::array(
      {ordered_json::array({cfg.pair.first.a1, cfg.pair.first.a2}),
       ordered_json::array({cfg.pair.second.a1, cfg.pair.second.a2})});
  switch (cfg.estimand) {
    case ContrastWeights::Kind::EndOfStudy:
      analysis["estimand"] = "end_of_study";
      break;
    case ContrastWeights::Kind::Auc:
      analysis["estimand"] = "auc";
      break;
    case ContrastWeights::Kind::Custom:
      analysis["estimand"] = ordered_json{{"custom", cfg.custom_weights}};
      break;
  }
  analysis["alpha"] = cfg.alpha;
  doc["analysis"] = analysis;

  ordered_json mc;
  mc["m"] = cfg.m;
  mc["seed"] = cfg.seed;
  if (!cfg.n_grid.empty()) mc["n_grid"] = cfg.n_grid;
  if (cfg.n4_override) mc["n4"] = *cfg.n4_override;
  if (cfg.power_target) mc["power_target"] = *cfg.power_target;
  doc["monte_carlo"] = mc;

  ordered_json cal;
  cal["step"] = cfg.cal_step;
  cal["m"] = cfg.cal_m;
  cal["n_star"] = cfg.cal_n_star;
  doc["calibration"] = cal;

  if (!cfg.warnings.empty()) doc["warnings"] = cfg.warnings;
  return doc.dump(2) + "\n";
}

EtsGrid resolve_grid(const StudyConfig& cfg) {
  EtsGrid grid = EtsGrid::empty(cfg.design.T, cfg.design.K);
  for (const auto& [label, cells] : cfg.grid_spec) {
    for (size_t ci = 0; ci < cells.size(); ++ci) {
      NbParams p;
      p.mean = cells[ci].mean;
      const std::string path =
          "grid." + label + "[" + std::to_string(ci) + "]";
      try {
        if (cells[ci].dispersion)
          p.dispersion = *cells[ci].dispersion;
        else
          p.dispersion = solve_dispersion_from_zero_mass(
              p.mean, *cells[ci].zero_proportion);
        p.validate();
      } catch (const std::exception& e) {
        fail(path, e.what());
      }
      // label order matches storage codes (see grid_labels)
      int code = -1;
      for (int c = 0; c < 9; ++c)
        if (ets_from_code(c).label() == label) code = c;
      const int j = code == 0         ? 1
                    : code <= 2       ? 2 + static_cast<int>(ci)
                                      : cfg.design.K + 1 + static_cast<int>(ci);
      grid.at(ets_from_code(code), j) = p;
    }
  }
  grid.validate();
  return grid;
}

ContrastWeights resolve_weights(const StudyConfig& cfg) {
  switch (cfg.estimand) {
    case ContrastWeights::Kind::EndOfStudy:
      return ContrastWeights::end_of_study(cfg.design.T);
    case ContrastWeights::Kind::Auc:
      return ContrastWeights::auc(cfg.design.times);
    case ContrastWeights::Kind::Custom:
      return ContrastWeights::custom(cfg.custom_weights);
  }
  throw ConfigError("analysis.estimand: unknown kind");
}

DependenceSpec resolve_dependence(const StudyConfig& cfg) {
  if (!cfg.rho)
    throw ConfigError(
        "dependence.rho is required here (run calibrate first to turn "
        "target_tau_max into rho)");
  DependenceSpec dep{cfg.structure, *cfg.rho,
                     cfg.eta ? *cfg.eta : *cfg.rho / 2.0};
  dep.validate();
  return dep;
}

PowerConfig make_power_config(const StudyConfig& cfg) {
  PowerConfig pc;
  pc.design = cfg.design;
  pc.grid = resolve_grid(cfg);
  pc.dep = resolve_dependence(cfg);
  pc.pair = cfg.pair;
  pc.weights = resolve_weights(cfg);
  pc.alpha = cfg.alpha;
  pc.m = cfg.m;
  pc.master_seed = cfg.seed;
  pc.n4_override = cfg.n4_override;
  pc.validate();
  return pc;
}

DerivedEcho derive_echo(const StudyConfig& cfg) {
  const EtsGrid grid = resolve_grid(cfg);
  DerivedEcho echo;
  echo.p = response_probability(grid.at(EtsId::first(+1), cfg.design.K),
                                cfg.design.rule);
  echo.q = response_probability(grid.at(EtsId::first(-1), cfg.design.K),
                                cfg.design.rule);
  echo.delta_true =
      true_delta(grid, cfg.design, resolve_weights(cfg), cfg.pair);
  for (int code = 0; code < 9; ++code) {
    const EtsId e = ets_from_code(code);
    const int lo = code == 0 ? 1 : code <= 2 ? 2 : cfg.design.K + 1;
    const int hi = code == 0 ? 1 : code <= 2 ? cfg.design.K : cfg.design.T;
    for (int j = lo; j <= hi; ++j)
      echo.cells.emplace_back(e.label(), j, grid.at(e, j).mean,
                              grid.at(e, j).dispersion);
  }
  return echo;
}

}  // namespace smartpower
