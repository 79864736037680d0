#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smartpower/contrast.hpp"
#include "smartpower/design.hpp"
#include "smartpower/copula.hpp"
#include "smartpower/trial.hpp"

namespace smartpower {

struct PowerConfig {
  TrialDesign design;
  EtsGrid grid;
  DependenceSpec dep;
  EdtrPair pair;
  ContrastWeights weights;
  double alpha = 0.05;
  int m = 1000;
  std::uint64_t master_seed = 0;
  std::optional<int> n4_override;

  void validate() const;
};

enum class RepStatus : std::uint8_t {
  Ok = 0,
  Singular = 1,
  Diverged = 2,
  DegenerateVariance = 3,
};

struct RepOutcome {
  RepStatus status = RepStatus::Ok;
  bool reject = false;
  double z = 0.0;
  double delta = 0.0;
  double var = 0.0;
};

struct PowerEstimate {
  int n = 0;
  int m = 0;
  int failed = 0;
  double power = 0.0;
  double mc_se = 0.0;
  double elapsed_secs = 0.0;
  std::vector<RepOutcome> replicates;
};

/** Full pipeline for one replicate (exposed for diagnostics and tests).
 *  Replicate streams are keyed by (master_seed, n, replicate index). */
RepOutcome run_replicate(const GenContext& ctx, const PowerConfig& cfg, int n,
                         int replicate);

/** Monte Carlo power at total sample size n. Failed replicates are excluded
 *  from the rejection fraction and reported. */
PowerEstimate estimate_power(const PowerConfig& cfg, int n, int threads = 0);

std::vector<PowerEstimate> power_curve(const PowerConfig& cfg,
                                       const std::vector<int>& n_grid,
                                       int threads = 0);

struct SampleSizeResult {
  std::optional<int> n;  // empty when the target was not achieved
  double target = 0.0;
  std::vector<PowerEstimate> curve;  // grid points evaluated, in order
};

/** Walks the grid in order and stops at the first n whose estimated power
 *  reaches the target. */
SampleSizeResult find_sample_size(const PowerConfig& cfg, double target,
                                  const std::vector<int>& n_grid,
                                  int threads = 0);

enum class SweepAxis { Eta, N4 };

struct SweepPoint {
  double value = 0.0;
  std::optional<PowerEstimate> estimate;  // empty when the point errored
  std::string error;
};

/** Power at fixed n while one robustness axis varies. Infeasible points are
 *  reported in place rather than aborting the sweep. */
std::vector<SweepPoint> sensitivity_sweep(const PowerConfig& cfg,
                                          SweepAxis axis,
                                          const std::vector<double>& values,
                                          int n, int threads = 0);

/** Responder rates implied by the grid and rule: P(response | arm). */
double implied_responder_rate(const PowerConfig& cfg, int a1);

}  // namespace smartpower
