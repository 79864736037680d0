#pragma once

#include <Eigen/Dense>
#include <vector>

#include "smartpower/design.hpp"
#include "smartpower/rng.hpp"

namespace smartpower {

enum class CorrStructure { AR1, Exchangeable };

/** Latent (normal-scale) dependence model. `eta` couples coordinates that
 *  sit on different treatment paths; the conventional default is rho / 2. */
struct DependenceSpec {
  CorrStructure structure = CorrStructure::AR1;
  double rho = 0.0;
  double eta = 0.0;

  static DependenceSpec make(CorrStructure s, double rho) {
    return {s, rho, rho / 2.0};
  }
  static DependenceSpec make(CorrStructure s, double rho, double eta) {
    return {s, rho, eta};
  }
  void validate() const;
};

/** True when one coordinate's sequence can lie on the other's treatment
 *  path: baseline pairs with everything, first-stage slots share a path
 *  when they share a1, and two second-stage sequences only when identical. */
bool same_path(const EtsId& a, const EtsId& b);

/** Latent correlation entry for two slots under the dependence model. */
double latent_correlation(const OutcomeSlot& a, const OutcomeSlot& b,
                          const std::vector<double>& times,
                          const DependenceSpec& dep);

Eigen::MatrixXd build_latent_correlation(const std::vector<OutcomeSlot>& slots,
                                         const std::vector<double>& times,
                                         const DependenceSpec& dep);

Eigen::MatrixXd build_latent_correlation(int subgroup,
                                         const TrialDesign& design,
                                         const DependenceSpec& dep);

/** Smallest eigenvalue; throws on non-square or asymmetric input. */
double min_eigenvalue(const Eigen::MatrixXd& m);

/** Throws NotPositiveDefiniteError when min eigenvalue <= tol. */
void check_positive_definite(const Eigen::MatrixXd& m, double tol = 1e-10);

/** Lower Cholesky factor; treats factorization failure as a PD rejection. */
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& corr);

/** Fills one row of correlated counts: z = L*eps, u = Phi(z), x = F^{-1}(u).
 *  Consumes exactly L.rows() normal draws from rng. */
void sample_copula_row(const Eigen::MatrixXd& chol_lower,
                       const std::vector<CdfTable>& marginals, Rng& rng,
                       int* out);

/** n draws from the count copula; rows are individuals. */
Eigen::MatrixXi sample_copula(int n, const Eigen::MatrixXd& corr,
                              const std::vector<CdfTable>& marginals,
                              Rng& rng);

}  // namespace smartpower
