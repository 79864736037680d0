#include "smartpower/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smartpower/errors.hpp"
#include "smartpower/parallel.hpp"

namespace smartpower {

namespace {

constexpr std::uint64_t kTagCalibration = 0xCA11;

// Per-subgroup sufficient statistics for pairwise-complete correlations:
// column sums, sums of squares (gram diagonal), and cross products.
struct BlockStats {
  int n = 0;
  std::vector<int> global_col;  // local column -> global column
  Eigen::VectorXd colsum;
  Eigen::MatrixXd gram;
};

std::vector<int> global_index_map(const TrialDesign& design) {
  // (ets_code, occasion) -> global column
  std::vector<int> map(9 * (design.T + 1), -1);
  const auto all = enumerate_all_slots(design);
  for (size_t c = 0; c < all.size(); ++c)
    map[ets_code(all[c].ets) * (design.T + 1) + all[c].j] =
        static_cast<int>(c);
  return map;
}

std::vector<BlockStats> block_stats(const PotentialOutcomes& pot,
                                    const TrialDesign& design,
                                    const std::vector<int>& gmap) {
  std::vector<BlockStats> stats;
  stats.reserve(pot.groups.size());
  for (const auto& block : pot.groups) {
    BlockStats s;
    s.n = static_cast<int>(block.counts.rows());
    s.global_col.reserve(block.slots.size());
    for (const auto& slot : block.slots)
      s.global_col.push_back(gmap[ets_code(slot.ets) * (design.T + 1) + slot.j]);
    if (s.n > 0) {
      const Eigen::MatrixXd x = block.counts.cast<double>();
      s.colsum = x.colwise().sum();
      s.gram = x.transpose() * x;
    }
    stats.push_back(std::move(s));
  }
  return stats;
}

struct PairAccum {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;

  void add(const BlockStats& s, int la, int lb) {
    n += s.n;
    sx += s.colsum[la];
    sy += s.colsum[lb];
    sxx += s.gram(la, la);
    syy += s.gram(lb, lb);
    sxy += s.gram(la, lb);
  }

  // Pearson correlation, or NaN when inestimable.
  double corr() const {
    if (n < 2) return std::nan("");
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    if (vx <= 1e-12 || vy <= 1e-12) return std::nan("");
    return (sxy - sx * sy / n) / std::sqrt(vx * vy);
  }
};

// Every correlation is estimated inside one responder subgroup. Pooling
// subgroups would mix differently truncated marginals for the same slot
// (responder-side point mass vs the > c tail at occasion K) and the pooled
// mean shift masquerades as correlation.
std::vector<double> subgroup_pair_correlations(const PotentialOutcomes& pot) {
  std::vector<double> out;
  for (const auto& block : pot.groups) {
    const int d = static_cast<int>(block.slots.size());
    if (block.counts.rows() < 2) {
      out.insert(out.end(), d * (d - 1) / 2, std::nan(""));
      continue;
    }
    BlockStats s;
    s.n = static_cast<int>(block.counts.rows());
    const Eigen::MatrixXd x = block.counts.cast<double>();
    s.colsum = x.colwise().sum();
    s.gram = x.transpose() * x;
    for (int a = 0; a < d; ++a) {
      for (int c = a + 1; c < d; ++c) {
        PairAccum acc;
        acc.add(s, a, c);
        out.push_back(acc.corr());
      }
    }
  }
  return out;
}

}  // namespace

double empirical_tau_max_one(const PotentialOutcomes& pot,
                             const TrialDesign& design) {
  (void)design;
  double tau = std::nan("");
  for (const double r : subgroup_pair_correlations(pot)) {
    if (std::isnan(r)) continue;
    if (std::isnan(tau) || r > tau) tau = r;
  }
  if (std::isnan(tau))
    throw NumericError("no estimable coordinate pair in calibration dataset");
  return tau;
}

namespace {

// Mean correlation per (subgroup, slot pair) across datasets, then the max.
// Averaging before the max keeps sampling noise out of the estimate: a max
// of noisy per-dataset correlations would be biased upward by the largest
// fluctuation rather than tracking the largest true correlation.
struct TauReduction {
  double tau = std::nan("");
  double se_at_max = 0.0;
};

TauReduction reduce_tau(const std::vector<std::vector<double>>& per_dataset) {
  const size_t entries = per_dataset.front().size();
  TauReduction red;
  for (size_t e = 0; e < entries; ++e) {
    double sum = 0.0, sumsq = 0.0;
    int count = 0;
    for (const auto& rs : per_dataset) {
      if (std::isnan(rs[e])) continue;
      sum += rs[e];
      sumsq += rs[e] * rs[e];
      ++count;
    }
    if (count == 0) continue;
    const double mean = sum / count;
    if (std::isnan(red.tau) || mean > red.tau) {
      red.tau = mean;
      red.se_at_max =
          count > 1 ? std::sqrt((sumsq - sum * mean) / (count - 1.0) / count)
                    : 0.0;
    }
  }
  if (std::isnan(red.tau))
    throw NumericError("no estimable coordinate pair in calibration dataset");
  return red;
}

}  // namespace

double empirical_tau_max(const std::vector<PotentialOutcomes>& datasets,
                         const TrialDesign& design) {
  (void)design;
  if (datasets.empty())
    throw DomainError("empirical_tau_max: need at least one dataset");
  std::vector<std::vector<double>> per_dataset;
  per_dataset.reserve(datasets.size());
  for (const auto& pot : datasets)
    per_dataset.push_back(subgroup_pair_correlations(pot));
  return reduce_tau(per_dataset).tau;
}

namespace {

SubgroupSizes calibration_sizes(const TrialDesign& design, const EtsGrid& grid,
                                int n_star) {
  const double p =
      response_probability(grid.at(EtsId::first(+1), design.K), design.rule);
  const double q =
      response_probability(grid.at(EtsId::first(-1), design.K), design.rule);
  return subgroup_sizes(n_star, p, q);
}

}  // namespace

TauEstimate estimate_tau_max(const TrialDesign& design, const EtsGrid& grid,
                             const DependenceSpec& dep, int m, int n_star,
                             std::uint64_t seed, int threads) {
  if (m < 1) throw DomainError("estimate_tau_max: m must be positive");
  const GenContext ctx = prepare_generator(calibration_sizes(design, grid, n_star),
                                           design, grid, dep);
  std::vector<std::vector<double>> per_dataset(m);
  parallel_for(m, threads, [&](int i) {
    const RngStream stream{derive_seed(seed, kTagCalibration, i)};
    per_dataset[i] =
        subgroup_pair_correlations(generate_potential_outcomes(ctx, stream));
  });
  const TauReduction red = reduce_tau(per_dataset);
  TauEstimate est;
  est.m = m;
  est.mean = red.tau;
  est.mc_se = red.se_at_max;
  return est;
}

CalibrationTable calibrate_rho(double target_tau, const TrialDesign& design,
                               const EtsGrid& grid, CorrStructure structure,
                               std::optional<double> fixed_eta, double step,
                               int m, int n_star, std::uint64_t seed,
                               int threads) {
  if (!(step > 0.0 && step < 1.0))
    throw DomainError("calibrate_rho: step must lie in (0, 1)");
  CalibrationTable table;
  table.target = target_tau;
  for (int g = 0;; ++g) {
    const double rho = g * step;
    if (rho > 0.999) break;
    const DependenceSpec dep{structure, rho,
                             fixed_eta ? *fixed_eta : rho / 2.0};
    bool pd = true;
    for (int sg = 1; sg <= 4; ++sg) {
      if (min_eigenvalue(build_latent_correlation(sg, design, dep)) <= 1e-10) {
        pd = false;
        break;
      }
    }
    if (!pd) break;
    // Same seed at every grid point: common random numbers keep the
    // tau curve monotone in rho up to transform effects.
    const TauEstimate est =
        estimate_tau_max(design, grid, dep, m, n_star, seed, threads);
    table.points.push_back({rho, est.mean, est.mc_se});
  }
  if (table.points.empty())
    throw NotPositiveDefiniteError(
        "no positive definite grid point (check eta)");
  double lo = table.points.front().tau_hat, hi = lo;
  for (const auto& pt : table.points) {
    lo = std::min(lo, pt.tau_hat);
    hi = std::max(hi, pt.tau_hat);
  }
  if (target_tau > hi) {
    std::ostringstream msg;
    msg << "target tau " << target_tau << " unreachable: achievable range ["
        << lo << ", " << hi << "] on the positive definite grid";
    throw UnreachableTargetError(msg.str(), lo, hi);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pt : table.points) {
    const double miss = std::fabs(pt.tau_hat - target_tau);
    if (miss < best) {
      best = miss;
      table.selected_rho = pt.rho;
    }
  }
  return table;
}

PathCorrelations empirical_path_correlations(const TrialDesign& design,
                                             const EtsGrid& grid,
                                             const DependenceSpec& dep, int m,
                                             int n_star, std::uint64_t seed,
                                             int threads) {
  if (m < 1) throw DomainError("empirical_path_correlations: m >= 1");
  const GenContext ctx = prepare_generator(calibration_sizes(design, grid, n_star),
                                           design, grid, dep);
  const auto gmap = global_index_map(design);
  const int T = design.T;

  // Path p follows stage-2 sequence p; its members are the two subgroups
  // whose response behaviour matches that sequence.
  std::array<std::vector<int>, 6> path_groups;
  for (int p = 0; p < 6; ++p) {
    const EtsId& e = stage2_sequences()[p];
    for (int g = 1; g <= 4; ++g)
      if (responds(g, e.a1) == (e.r == 1)) path_groups[p].push_back(g);
  }
  auto path_slot = [&](int p, int j) -> int {
    const EtsId e = j == 1 ? EtsId::baseline()
                  : j <= design.K ? EtsId::first(stage2_sequences()[p].a1)
                                  : stage2_sequences()[p];
    return gmap[ets_code(e) * (T + 1) + j];
  };

  std::vector<std::array<Eigen::MatrixXd, 6>> per_dataset(m);
  parallel_for(m, threads, [&](int i) {
    const RngStream stream{derive_seed(seed, kTagCalibration, i)};
    const auto pot = generate_potential_outcomes(ctx, stream);
    const auto stats = block_stats(pot, design, gmap);
    const int d = static_cast<int>(enumerate_all_slots(design).size());
    std::vector<std::vector<int>> local(stats.size(), std::vector<int>(d, -1));
    for (size_t b = 0; b < stats.size(); ++b)
      for (size_t lc = 0; lc < stats[b].global_col.size(); ++lc)
        local[b][stats[b].global_col[lc]] = static_cast<int>(lc);
    for (int p = 0; p < 6; ++p) {
      Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(T, T);
      for (int ja = 1; ja <= T; ++ja) {
        for (int jb = ja + 1; jb <= T; ++jb) {
          PairAccum acc;
          for (int g : path_groups[p]) {
            const BlockStats& s = stats[g - 1];
            if (s.n == 0) continue;
            const int la = local[g - 1][path_slot(p, ja)];
            const int lb = local[g - 1][path_slot(p, jb)];
            acc.add(s, la, lb);
          }
          const double r = acc.corr();
          corr(ja - 1, jb - 1) = r;
          corr(jb - 1, ja - 1) = r;
        }
      }
      per_dataset[i][p] = std::move(corr);
    }
  });

  PathCorrelations out;
  for (int p = 0; p < 6; ++p) {
    out.labels[p] = stage2_sequences()[p].label();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(T, T);
    Eigen::MatrixXd count = Eigen::MatrixXd::Zero(T, T);
    for (int i = 0; i < m; ++i) {
      for (int a = 0; a < T; ++a)
        for (int b = 0; b < T; ++b)
          if (!std::isnan(per_dataset[i][p](a, b))) {
            sum(a, b) += per_dataset[i][p](a, b);
            count(a, b) += 1.0;
          }
    }
    out.corr[p] = sum.array() / count.array().max(1.0);
  }
  return out;
}

}  // namespace smartpower
