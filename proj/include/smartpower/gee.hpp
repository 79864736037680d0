#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "smartpower/design.hpp"
#include "smartpower/trial.hpp"

namespace smartpower {

/** Embedded regimen (a1, a2NR): first-stage arm plus the arm a non-responder
 *  would receive. Indexed 0..3 as (+1,+1), (+1,-1), (-1,+1), (-1,-1). */
struct Edtr {
  int a1 = +1;
  int a2 = +1;
  bool operator==(const Edtr& o) const { return a1 == o.a1 && a2 == o.a2; }
};

int edtr_index(const Edtr& e);
Edtr edtr_from_index(int idx);

struct ReplicatedRow {
  std::int32_t id = 0;
  std::int8_t edtr = 0;  // 0..3
  std::int8_t j = 1;     // occasion, 1-based
  std::int32_t y = 0;
  double w = 1.0;
};

/** Replicates responders into both regimens consistent with their first-stage
 *  arm (weight 1/P(A1)), leaves non-responders on their single consistent
 *  regimen (weight 1/(P(A1)P(A2))), one row per occasion. */
std::vector<ReplicatedRow> build_weighted_replicated_dataset(
    const ObservedTrial& trial, const TrialDesign& design);

/** Number of marginal-model coefficients: 4T - 2K - 1. */
int coef_count(const TrialDesign& design);

/** Index of the single non-intercept coefficient active for a regimen at an
 *  occasion; -1 at j == 1 where only the shared intercept applies. */
int coef_index(int edtr, int j, const TrialDesign& design);

/** Dense 0/1 covariate row (intercept first). */
Eigen::VectorXd design_row(int edtr, int j, const TrialDesign& design);

struct GeeFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;  // sandwich, clustered on individuals; Var(beta_hat)
  int iterations = 0;
};

/** Weighted GEE with log link, independence working correlation, and
 *  variance-proportional-to-mean working variance. */
GeeFit fit_gee(const std::vector<ReplicatedRow>& rows,
               const TrialDesign& design);

}  // namespace smartpower
