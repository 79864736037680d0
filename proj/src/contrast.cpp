#include "smartpower/contrast.hpp"

#include <cmath>

#include "smartpower/errors.hpp"
#include "smartpower/numeric.hpp"

namespace smartpower {

ContrastWeights ContrastWeights::end_of_study(int T) {
  if (T < 1) throw DomainError("end_of_study: T must be positive");
  ContrastWeights w;
  w.kind = Kind::EndOfStudy;
  w.l.assign(T, 0.0);
  w.l.back() = 1.0;
  return w;
}

ContrastWeights ContrastWeights::auc(const std::vector<double>& times) {
  const int T = static_cast<int>(times.size());
  if (T < 2) throw DomainError("auc: need at least two occasions");
  ContrastWeights w;
  w.kind = Kind::Auc;
  w.l.resize(T);
  w.l[0] = (times[1] - times[0]) / 2.0;
  w.l[T - 1] = (times[T - 1] - times[T - 2]) / 2.0;
  for (int j = 1; j < T - 1; ++j) w.l[j] = (times[j + 1] - times[j - 1]) / 2.0;
  return w;
}

ContrastWeights ContrastWeights::custom(std::vector<double> weights) {
  if (weights.empty()) throw DomainError("custom weights must be nonempty");
  ContrastWeights w;
  w.kind = Kind::Custom;
  w.l = std::move(weights);
  return w;
}

Eigen::MatrixXd selector_matrix(int edtr, const TrialDesign& design) {
  design.validate();
  Eigen::MatrixXd C(design.T, coef_count(design));
  for (int j = 1; j <= design.T; ++j)
    C.row(j - 1) = design_row(edtr, j, design).transpose();
  return C;
}

std::vector<double> edtr_mean_trajectory(const EtsGrid& grid,
                                         const TrialDesign& design,
                                         const Edtr& e) {
  design.validate();
  grid.validate();
  if (grid.T != design.T || grid.K != design.K)
    throw DomainError("edtr_mean_trajectory: grid does not match design");
  const double resp =
      response_probability(grid.at(EtsId::first(e.a1), design.K), design.rule);
  std::vector<double> mu(design.T);
  mu[0] = grid.at(EtsId::baseline(), 1).mean;
  for (int j = 2; j <= design.K; ++j)
    mu[j - 1] = grid.at(EtsId::first(e.a1), j).mean;
  const EtsId resp_path = EtsId::second(e.a1, 1, 0);
  const EtsId nonresp_path = EtsId::second(e.a1, 0, e.a2);
  for (int j = design.K + 1; j <= design.T; ++j)
    mu[j - 1] = resp * grid.at(resp_path, j).mean +
                (1.0 - resp) * grid.at(nonresp_path, j).mean;
  return mu;
}

double true_delta(const EtsGrid& grid, const TrialDesign& design,
                  const ContrastWeights& weights, const EdtrPair& pair) {
  if (static_cast<int>(weights.l.size()) != design.T)
    throw DomainError("true_delta: weights length must equal T");
  const auto mu1 = edtr_mean_trajectory(grid, design, pair.first);
  const auto mu2 = edtr_mean_trajectory(grid, design, pair.second);
  double delta = 0.0;
  for (int j = 0; j < design.T; ++j)
    delta += weights.l[j] * (mu1[j] - mu2[j]);
  return delta;
}

namespace {

// Fitted mean trajectory of a regimen at the given coefficients.
void fitted_means(const Eigen::VectorXd& beta, int edtr,
                  const TrialDesign& design, std::vector<double>& mu) {
  mu.resize(design.T);
  for (int j = 1; j <= design.T; ++j) {
    const int k = coef_index(edtr, j, design);
    mu[j - 1] = std::exp(beta[0] + (k >= 0 ? beta[k] : 0.0));
  }
}

}  // namespace

double contrast_value(const Eigen::VectorXd& beta, const EdtrPair& pair,
                      const ContrastWeights& weights,
                      const TrialDesign& design) {
  if (static_cast<int>(weights.l.size()) != design.T)
    throw DomainError("contrast: weights length must equal T");
  std::vector<double> mu1, mu2;
  fitted_means(beta, edtr_index(pair.first), design, mu1);
  fitted_means(beta, edtr_index(pair.second), design, mu2);
  double delta = 0.0;
  for (int j = 0; j < design.T; ++j)
    delta += weights.l[j] * (mu1[j] - mu2[j]);
  return delta;
}

Eigen::VectorXd contrast_gradient(const Eigen::VectorXd& beta,
                                  const EdtrPair& pair,
                                  const ContrastWeights& weights,
                                  const TrialDesign& design) {
  if (static_cast<int>(weights.l.size()) != design.T)
    throw DomainError("contrast: weights length must equal T");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
  const int e1 = edtr_index(pair.first), e2 = edtr_index(pair.second);
  for (int j = 1; j <= design.T; ++j) {
    const int k1 = coef_index(e1, j, design);
    const double m1 = std::exp(beta[0] + (k1 >= 0 ? beta[k1] : 0.0));
    g[0] += weights.l[j - 1] * m1;
    if (k1 >= 0) g[k1] += weights.l[j - 1] * m1;
    const int k2 = coef_index(e2, j, design);
    const double m2 = std::exp(beta[0] + (k2 >= 0 ? beta[k2] : 0.0));
    g[0] -= weights.l[j - 1] * m2;
    if (k2 >= 0) g[k2] -= weights.l[j - 1] * m2;
  }
  return g;
}

TestResult z_test(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov,
                  const EdtrPair& pair, const ContrastWeights& weights,
                  const TrialDesign& design, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("z_test: alpha must lie in (0, 1)");
  if (cov.rows() != beta.size() || cov.cols() != beta.size())
    throw DomainError("z_test: covariance shape does not match beta");
  TestResult res;
  res.delta = contrast_value(beta, pair, weights, design);
  const Eigen::VectorXd g = contrast_gradient(beta, pair, weights, design);
  res.var = g.dot(cov * g);
  if (!(res.var > 0.0) || !std::isfinite(res.var))
    throw DegenerateVarianceError("contrast variance is not positive");
  res.z = res.delta / std::sqrt(res.var);
  res.p_value = 2.0 * (1.0 - norm_cdf(std::fabs(res.z)));
  res.reject = std::fabs(res.z) > norm_quantile(1.0 - alpha / 2.0);
  return res;
}

}  // namespace smartpower
