#include <array>
#include <sstream>

#include "smartpower/config.hpp"
#include "smartpower/errors.hpp"

namespace smartpower {

namespace {

constexpr double kBaseMeans[6] = {2.5, 4.8, 2.6, 2.7, 2.75, 2.8};

// Dispersion grids for the three null (no-effect) scenarios, occasions 1..6.
// Scenario 1 is mildly, 2 moderately, 3 strongly overdispersed.
constexpr std::array<std::array<double, 6>, 3> kNullDispersion = {{
    {0.51, 1.18, 0.55, 0.60, 0.62, 0.63},
    {1.92, 2.98, 1.98, 2.05, 2.08, 2.11},
    {5.15, 6.91, 5.26, 5.36, 5.41, 5.46},
}};

StudyConfig base_config() {
  StudyConfig cfg;
  cfg.design.T = 6;
  cfg.design.K = 2;
  cfg.design.times = {1, 2, 3, 4, 5, 6};
  cfg.design.rule = ResponseRule::at_most(0);
  cfg.design.p_a1 = 0.5;
  cfg.design.p_a2 = 0.5;
  cfg.pair = {{+1, +1}, {-1, +1}};
  cfg.estimand = ContrastWeights::Kind::EndOfStudy;
  cfg.alpha = 0.05;
  cfg.m = 1000;
  cfg.seed = 123456789;
  cfg.n_grid = {100, 150, 200, 250, 300, 350, 400, 450, 500, 550};
  return cfg;
}

std::vector<GridCellSpec> zero_prop_cells(const std::vector<double>& means,
                                          double pi0) {
  std::vector<GridCellSpec> cells;
  for (double mu : means) {
    GridCellSpec c;
    c.mean = mu;
    c.zero_proportion = pi0;
    cells.push_back(c);
  }
  return cells;
}

std::vector<GridCellSpec> dispersion_cells(const std::vector<double>& means,
                                           const std::vector<double>& zetas) {
  std::vector<GridCellSpec> cells;
  for (size_t i = 0; i < means.size(); ++i) {
    GridCellSpec c;
    c.mean = means[i];
    c.dispersion = zetas[i];
    cells.push_back(c);
  }
  return cells;
}

/** Effect ladder k = 1..10: the +1 first-stage arm's post-split means are
 *  lifted by 7k% at the interior occasions and 10k% at the last one, which
 *  steps the end-of-study contrast by 0.28 per level. */
StudyConfig effect_scenario(int k) {
  StudyConfig cfg = base_config();
  cfg.structure = CorrStructure::Exchangeable;
  cfg.rho = 0.6;
  const double f_mid = 1.0 + 0.07 * k;
  const double f_end = 1.0 + 0.10 * k;
  const std::vector<double> minus = {kBaseMeans[2], kBaseMeans[3],
                                     kBaseMeans[4], kBaseMeans[5]};
  const std::vector<double> plus = {kBaseMeans[2] * f_mid,
                                    kBaseMeans[3] * f_mid,
                                    kBaseMeans[4] * f_mid,
                                    kBaseMeans[5] * f_end};
  const double pi0 = 0.40;
  cfg.grid_spec.emplace_back("(.)", zero_prop_cells({kBaseMeans[0]}, pi0));
  cfg.grid_spec.emplace_back("(+1)", zero_prop_cells({kBaseMeans[1]}, pi0));
  cfg.grid_spec.emplace_back("(-1)", zero_prop_cells({kBaseMeans[1]}, pi0));
  for (const auto& e : stage2_sequences())
    cfg.grid_spec.emplace_back(e.label(),
                               zero_prop_cells(e.a1 > 0 ? plus : minus, pi0));
  return cfg;
}

/** Null scenarios: every sequence follows the base trajectory, dispersion
 *  pinned per occasion. */
StudyConfig null_scenario(int s) {
  StudyConfig cfg = base_config();
  cfg.structure = CorrStructure::AR1;
  cfg.rho = 0.6;
  const auto& zeta = kNullDispersion[s - 1];
  cfg.grid_spec.emplace_back(
      "(.)", dispersion_cells({kBaseMeans[0]}, {zeta[0]}));
  cfg.grid_spec.emplace_back(
      "(+1)", dispersion_cells({kBaseMeans[1]}, {zeta[1]}));
  cfg.grid_spec.emplace_back(
      "(-1)", dispersion_cells({kBaseMeans[1]}, {zeta[1]}));
  const std::vector<double> tail = {kBaseMeans[2], kBaseMeans[3],
                                    kBaseMeans[4], kBaseMeans[5]};
  const std::vector<double> tail_zeta = {zeta[2], zeta[3], zeta[4], zeta[5]};
  for (const auto& e : stage2_sequences())
    cfg.grid_spec.emplace_back(e.label(), dispersion_cells(tail, tail_zeta));
  if (s == 1)
    cfg.warnings.push_back(
        "null-scenario-1: the dispersion grid implies a zero proportion near "
        "0.20 (not 0.40); the dispersion column is taken as authoritative");
  return cfg;
}

}  // namespace

StudyConfig preset(const std::string& name) {
  const auto dash = name.rfind('-');
  if (dash != std::string::npos) {
    const std::string stem = name.substr(0, dash);
    int num = -1;
    try {
      num = std::stoi(name.substr(dash + 1));
    } catch (...) {
      num = -1;
    }
    if (stem == "table3-scenario" && num >= 1 && num <= 10)
      return effect_scenario(num);
    if (stem == "webtable6-scenario" && num >= 1 && num <= 3)
      return null_scenario(num);
  }
  std::ostringstream msg;
  msg << "unknown preset '" << name << "'; available: ";
  bool first = true;
  for (const auto& n : preset_names()) {
    if (!first) msg << ", ";
    msg << n;
    first = false;
  }
  throw ConfigError(msg.str());
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (int k = 1; k <= 10; ++k)
    names.push_back("table3-scenario-" + std::to_string(k));
  for (int s = 1; s <= 3; ++s)
    names.push_back("webtable6-scenario-" + std::to_string(s));
  return names;
}

}  // namespace smartpower
