#pragma once

#include <Eigen/Dense>
#include <vector>

#include "smartpower/design.hpp"
#include "smartpower/gee.hpp"

namespace smartpower {

/** Linear weights over the T occasion means defining the estimand. */
struct ContrastWeights {
  enum class Kind { EndOfStudy, Auc, Custom };
  Kind kind = Kind::EndOfStudy;
  std::vector<double> l;

  static ContrastWeights end_of_study(int T);
  /** Trapezoid weights: area under the mean trajectory. */
  static ContrastWeights auc(const std::vector<double>& times);
  static ContrastWeights custom(std::vector<double> weights);
};

struct EdtrPair {
  Edtr first;
  Edtr second;
};

/** T x P selector: row j picks the coefficients whose sum is the log mean
 *  of the regimen at occasion j. */
Eigen::MatrixXd selector_matrix(int edtr, const TrialDesign& design);

/** Mean trajectory of a regimen under the generative grid: before the split
 *  the first-stage arm's means; after it the responder-rate mixture of the
 *  responder path and the regimen's non-responder path. */
std::vector<double> edtr_mean_trajectory(const EtsGrid& grid,
                                         const TrialDesign& design,
                                         const Edtr& e);

/** True value of the weighted mean contrast between two regimens. */
double true_delta(const EtsGrid& grid, const TrialDesign& design,
                  const ContrastWeights& weights, const EdtrPair& pair);

struct TestResult {
  double delta = 0.0;
  double var = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

/** Delta-method Wald test of the contrast between two regimens.
 *  `cov` is the sandwich covariance of beta_hat (sample-size scale
 *  already absorbed). */
TestResult z_test(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov,
                  const EdtrPair& pair, const ContrastWeights& weights,
                  const TrialDesign& design, double alpha);

/** Gradient of the contrast in beta (exposed for verification). */
Eigen::VectorXd contrast_gradient(const Eigen::VectorXd& beta,
                                  const EdtrPair& pair,
                                  const ContrastWeights& weights,
                                  const TrialDesign& design);

/** The contrast itself as a function of beta. */
double contrast_value(const Eigen::VectorXd& beta, const EdtrPair& pair,
                      const ContrastWeights& weights,
                      const TrialDesign& design);

}  // namespace smartpower
