#include "smartpower/gee.hpp"

#include <cmath>
#include <sstream>

#include "smartpower/errors.hpp"

namespace smartpower {

int edtr_index(const Edtr& e) {
  if ((e.a1 != 1 && e.a1 != -1) || (e.a2 != 1 && e.a2 != -1))
    throw DomainError("Edtr: arms must be +1 or -1");
  return (e.a1 > 0 ? 0 : 2) + (e.a2 > 0 ? 0 : 1);
}

Edtr edtr_from_index(int idx) {
  if (idx < 0 || idx > 3) throw DomainError("edtr_from_index: index 0..3");
  return {idx < 2 ? +1 : -1, idx % 2 == 0 ? +1 : -1};
}

std::vector<ReplicatedRow> build_weighted_replicated_dataset(
    const ObservedTrial& trial, const TrialDesign& design) {
  design.validate();
  std::vector<ReplicatedRow> rows;
  rows.reserve(trial.rows.size() * design.T * 2);
  for (const auto& person : trial.rows) {
    const double p1 = person.a1 > 0 ? design.p_a1 : 1.0 - design.p_a1;
    if (person.r == 1) {
      const double w = 1.0 / p1;
      for (int a2 : {+1, -1}) {
        const auto e =
            static_cast<std::int8_t>(edtr_index({person.a1, a2}));
        for (int j = 1; j <= design.T; ++j)
          rows.push_back({person.id, e, static_cast<std::int8_t>(j),
                          person.y[j - 1], w});
      }
    } else {
      const double p2 = person.a2 > 0 ? design.p_a2 : 1.0 - design.p_a2;
      const double w = 1.0 / (p1 * p2);
      const auto e =
          static_cast<std::int8_t>(edtr_index({person.a1, person.a2}));
      for (int j = 1; j <= design.T; ++j)
        rows.push_back({person.id, e, static_cast<std::int8_t>(j),
                        person.y[j - 1], w});
    }
  }
  return rows;
}

int coef_count(const TrialDesign& design) {
  return 4 * design.T - 2 * design.K - 1;
}

int coef_index(int edtr, int j, const TrialDesign& design) {
  const int T = design.T, K = design.K;
  if (edtr < 0 || edtr > 3) throw DomainError("coef_index: edtr 0..3");
  if (j < 1 || j > T) throw DomainError("coef_index: occasion out of range");
  if (j == 1) return -1;
  if (j <= K) {
    const int arm_block = edtr < 2 ? 0 : 1;  // by first-stage arm
    return 1 + arm_block * (K - 1) + (j - 2);
  }
  return 1 + 2 * (K - 1) + edtr * (T - K) + (j - K - 1);
}

Eigen::VectorXd design_row(int edtr, int j, const TrialDesign& design) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(coef_count(design));
  x[0] = 1.0;
  const int k = coef_index(edtr, j, design);
  if (k >= 0) x[k] = 1.0;
  return x;
}

GeeFit fit_gee(const std::vector<ReplicatedRow>& rows,
               const TrialDesign& design) {
  design.validate();
  const int P = coef_count(design);
  if (rows.empty()) throw SingularDesignError("no rows to fit");

  // Precompute each row's secondary coefficient and check that every
  // coefficient is touched by data; an empty regimen-by-occasion cell makes
  // the information matrix singular.
  std::vector<int> idx2(rows.size());
  std::vector<char> seen(P, 0);
  seen[0] = 1;
  double wsum = 0.0, wysum = 0.0;
  for (size_t r = 0; r < rows.size(); ++r) {
    idx2[r] = coef_index(rows[r].edtr, rows[r].j, design);
    if (idx2[r] >= 0) seen[idx2[r]] = 1;
    wsum += rows[r].w;
    wysum += rows[r].w * rows[r].y;
  }
  for (int k = 0; k < P; ++k)
    if (!seen[k]) {
      std::ostringstream msg;
      msg << "design is singular: no data for coefficient " << k
          << " (empty regimen-by-occasion cell)";
      throw SingularDesignError(msg.str());
    }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(P);
  beta[0] = std::log(wysum / wsum + 0.5);

  auto score_and_info = [&](const Eigen::VectorXd& b, Eigen::VectorXd& U,
                            Eigen::MatrixXd& J, bool want_info) {
    U.setZero();
    if (want_info) J.setZero();
    for (size_t r = 0; r < rows.size(); ++r) {
      const int k = idx2[r];
      const double xb = b[0] + (k >= 0 ? b[k] : 0.0);
      const double mu = std::exp(xb);
      const double s = rows[r].w * (rows[r].y - mu);
      U[0] += s;
      if (k >= 0) U[k] += s;
      if (want_info) {
        const double wm = rows[r].w * mu;
        J(0, 0) += wm;
        if (k >= 0) {
          J(0, k) += wm;
          J(k, 0) += wm;
          J(k, k) += wm;
        }
      }
    }
  };

  Eigen::VectorXd U(P);
  Eigen::MatrixXd J(P, P);
  score_and_info(beta, U, J, false);
  double unorm = U.norm();
  int iterations = 0;
  bool converged = false;
  for (int iter = 1; iter <= 100; ++iter) {
    iterations = iter;
    score_and_info(beta, U, J, true);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(J);
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().minCoeff() < 1e-10 * J.diagonal().maxCoeff())
      throw SingularDesignError("information matrix is numerically singular");
    Eigen::VectorXd delta = ldlt.solve(U);
    // Damped step: halve until the score norm stops growing.
    double step = 1.0;
    Eigen::VectorXd trial_beta;
    double trial_norm = 0.0;
    Eigen::VectorXd trial_U(P);
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      trial_beta = beta + step * delta;
      score_and_info(trial_beta, trial_U, J, false);
      trial_norm = trial_U.norm();
      if (std::isfinite(trial_norm) && (trial_norm <= unorm || unorm == 0.0)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) throw DivergenceError("GEE step halving failed to descend");
    const double max_update = (step * delta).cwiseAbs().maxCoeff();
    beta = trial_beta;
    unorm = trial_norm;
    if (max_update < 1e-8) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw DivergenceError("GEE did not converge within 100 iterations");

  // Sandwich: bread from the information matrix at the solution, meat from
  // per-individual score outer products (rows are grouped by id).
  score_and_info(beta, U, J, true);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd ui = Eigen::VectorXd::Zero(P);
  std::int32_t current = rows.front().id;
  for (size_t r = 0; r <= rows.size(); ++r) {
    if (r == rows.size() || rows[r].id != current) {
      B.noalias() += ui * ui.transpose();
      if (r == rows.size()) break;
      ui.setZero();
      current = rows[r].id;
    }
    const int k = idx2[r];
    const double xb = beta[0] + (k >= 0 ? beta[k] : 0.0);
    const double s = rows[r].w * (rows[r].y - std::exp(xb));
    ui[0] += s;
    if (k >= 0) ui[k] += s;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(J);
  if (ldlt.info() != Eigen::Success)
    throw SingularDesignError("information matrix is numerically singular");
  const Eigen::MatrixXd Ainv_B = ldlt.solve(B);
  GeeFit fit;
  fit.beta = beta;
  fit.cov = ldlt.solve(Ainv_B.transpose()).transpose();
  fit.iterations = iterations;
  return fit;
}

}  // namespace smartpower
