#include "smartpower/copula.hpp"

#include <cmath>
#include <sstream>

#include "smartpower/errors.hpp"
#include "smartpower/numeric.hpp"

namespace smartpower {

void DependenceSpec::validate() const {
  if (!(rho >= 0.0 && rho < 1.0))
    throw DomainError("DependenceSpec: rho must lie in [0, 1)");
  if (!(eta >= 0.0 && eta < 1.0))
    throw DomainError("DependenceSpec: eta must lie in [0, 1)");
}

bool same_path(const EtsId& a, const EtsId& b) {
  if (a.stage == EtsId::Stage::Baseline || b.stage == EtsId::Stage::Baseline)
    return true;
  if (a.stage == EtsId::Stage::Second && b.stage == EtsId::Stage::Second)
    return a == b;
  return a.a1 == b.a1;
}

double latent_correlation(const OutcomeSlot& a, const OutcomeSlot& b,
                          const std::vector<double>& times,
                          const DependenceSpec& dep) {
  if (a == b) return 1.0;
  if (!same_path(a.ets, b.ets)) return dep.eta;
  if (dep.structure == CorrStructure::Exchangeable) return dep.rho;
  const double lag = std::fabs(times[a.j - 1] - times[b.j - 1]);
  return std::pow(dep.rho, lag);
}

Eigen::MatrixXd build_latent_correlation(const std::vector<OutcomeSlot>& slots,
                                         const std::vector<double>& times,
                                         const DependenceSpec& dep) {
  dep.validate();
  const int d = static_cast<int>(slots.size());
  Eigen::MatrixXd corr(d, d);
  for (int i = 0; i < d; ++i) {
    corr(i, i) = 1.0;
    for (int k = i + 1; k < d; ++k) {
      const double v = latent_correlation(slots[i], slots[k], times, dep);
      corr(i, k) = v;
      corr(k, i) = v;
    }
  }
  return corr;
}

Eigen::MatrixXd build_latent_correlation(int subgroup,
                                         const TrialDesign& design,
                                         const DependenceSpec& dep) {
  return build_latent_correlation(enumerate_slots(subgroup, design),
                                  design.times, dep);
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw DomainError("min_eigenvalue: matrix must be square");
  if (!m.isApprox(m.transpose(), 1e-12))
    throw DomainError("min_eigenvalue: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void check_positive_definite(const Eigen::MatrixXd& m, double tol) {
  const double lambda = min_eigenvalue(m);
  if (lambda <= tol) {
    std::ostringstream msg;
    msg << "latent correlation matrix is not positive definite "
        << "(min eigenvalue " << lambda << " <= " << tol << ")";
    throw NotPositiveDefiniteError(msg.str());
  }
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& corr) {
  check_positive_definite(corr);
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError(
        "Cholesky factorization of the latent correlation failed");
  return llt.matrixL();
}

void sample_copula_row(const Eigen::MatrixXd& chol_lower,
                       const std::vector<CdfTable>& marginals, Rng& rng,
                       int* out) {
  const int d = static_cast<int>(chol_lower.rows());
  Eigen::VectorXd eps(d);
  for (int k = 0; k < d; ++k) eps[k] = rng.normal();
  for (int k = 0; k < d; ++k) {
    // z_k depends only on eps[0..k] through the lower-triangular factor.
    double z = 0.0;
    for (int c = 0; c <= k; ++c) z += chol_lower(k, c) * eps[c];
    out[k] = marginals[k].quantile(norm_cdf(z));
  }
}

Eigen::MatrixXi sample_copula(int n, const Eigen::MatrixXd& corr,
                              const std::vector<CdfTable>& marginals,
                              Rng& rng) {
  const int d = static_cast<int>(corr.rows());
  if (static_cast<int>(marginals.size()) != d)
    throw DomainError("sample_copula: one marginal per correlation row");
  const Eigen::MatrixXd L = cholesky_factor(corr);
  Eigen::MatrixXi counts(n, d);
  std::vector<int> row(d);
  for (int i = 0; i < n; ++i) {
    sample_copula_row(L, marginals, rng, row.data());
    for (int k = 0; k < d; ++k) counts(i, k) = row[k];
  }
  return counts;
}

}  // namespace smartpower
