#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smartpower/power.hpp"

namespace smartpower {

/** One grid cell as the user wrote it: mean plus exactly one dispersion
 *  encoding (direct, or recovered from the zero proportion). */
struct GridCellSpec {
  double mean = 0.0;
  std::optional<double> dispersion;
  std::optional<double> zero_proportion;
};

/** Declarative run description; round-trips through JSON byte-identically. */
struct StudyConfig {
  TrialDesign design;
  // sequence label -> cells in occasion order; canonical label order
  std::vector<std::pair<std::string, std::vector<GridCellSpec>>> grid_spec;

  CorrStructure structure = CorrStructure::AR1;
  std::optional<double> rho;
  std::optional<double> target_tau_max;
  std::optional<double> eta;  // defaults to rho/2 when unset

  EdtrPair pair{{+1, +1}, {-1, +1}};
  ContrastWeights::Kind estimand = ContrastWeights::Kind::EndOfStudy;
  std::vector<double> custom_weights;
  double alpha = 0.05;

  int m = 1000;
  std::uint64_t seed = 123456789;
  std::vector<int> n_grid;
  std::optional<int> n4_override;
  std::optional<double> power_target;

  double cal_step = 0.05;
  int cal_m = 1000;
  int cal_n_star = 1000;

  std::vector<std::string> warnings;
};

StudyConfig parse_config_text(const std::string& json_text);
StudyConfig parse_config_file(const std::string& path);
std::string serialize_config(const StudyConfig& cfg);

/** Numeric grid with every dispersion resolved (zero proportions solved). */
EtsGrid resolve_grid(const StudyConfig& cfg);

ContrastWeights resolve_weights(const StudyConfig& cfg);

/** Requires rho (directly or after calibration). */
DependenceSpec resolve_dependence(const StudyConfig& cfg);

PowerConfig make_power_config(const StudyConfig& cfg);

/** Quantities implied by the config, echoed to the user before a run. */
struct DerivedEcho {
  double p = 0.0;  // responder rate, first-stage arm +1
  double q = 0.0;  // responder rate, first-stage arm -1
  double delta_true = 0.0;
  // (sequence label, occasion, mean, dispersion)
  std::vector<std::tuple<std::string, int, double, double>> cells;
};

DerivedEcho derive_echo(const StudyConfig& cfg);

/** Built-in scenario presets. */
StudyConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace smartpower
