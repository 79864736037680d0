#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smartpower/copula.hpp"
#include "smartpower/design.hpp"
#include "smartpower/trial.hpp"

namespace smartpower {

/** Largest pairwise count correlation in one potential-outcome dataset,
 *  over distinct sequence-by-occasion coordinates, each pair estimated
 *  within one responder subgroup (a pair sharing both sequence and occasion
 *  is the same coordinate and never enters). Inestimable pairs are skipped:
 *  degenerate truncations and subgroups below two individuals. */
double empirical_tau_max_one(const PotentialOutcomes& pot,
                             const TrialDesign& design);

/** Max over coordinate pairs of the across-dataset mean correlation.
 *  Averaging first keeps the max from chasing sampling noise. */
double empirical_tau_max(const std::vector<PotentialOutcomes>& datasets,
                         const TrialDesign& design);

struct TauEstimate {
  double mean = 0.0;   // max over pairs of the across-dataset mean correlation
  double mc_se = 0.0;  // Monte Carlo se of the winning pair's mean
  int m = 0;
};

/** Generates M calibration datasets of n_star individuals (randomization
 *  never enters) and reduces them to the tau-max estimate. */
TauEstimate estimate_tau_max(const TrialDesign& design, const EtsGrid& grid,
                             const DependenceSpec& dep, int m, int n_star,
                             std::uint64_t seed, int threads = 0);

struct CalibrationPoint {
  double rho = 0.0;
  double tau_hat = 0.0;
  double mc_se = 0.0;
};

struct CalibrationTable {
  std::vector<CalibrationPoint> points;
  double selected_rho = 0.0;
  double target = 0.0;
};

/** Walks rho over {0, step, 2*step, ...} while every subgroup's latent
 *  correlation stays positive definite, estimates tau at each point, and
 *  picks the rho closest to the target (ties toward the smaller rho).
 *  eta follows rho/2 unless pinned. Throws UnreachableTargetError when the
 *  target exceeds everything achievable on the feasible grid. */
CalibrationTable calibrate_rho(double target_tau, const TrialDesign& design,
                               const EtsGrid& grid, CorrStructure structure,
                               std::optional<double> fixed_eta, double step,
                               int m, int n_star, std::uint64_t seed,
                               int threads = 0);

/** Count-scale correlation matrices along the six treatment paths,
 *  averaged over M generated datasets. */
struct PathCorrelations {
  std::array<std::string, 6> labels;
  std::array<Eigen::MatrixXd, 6> corr;  // each T x T
};

PathCorrelations empirical_path_correlations(const TrialDesign& design,
                                             const EtsGrid& grid,
                                             const DependenceSpec& dep, int m,
                                             int n_star, std::uint64_t seed,
                                             int threads = 0);

}  // namespace smartpower
