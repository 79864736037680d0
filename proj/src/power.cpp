#include "smartpower/power.hpp"

#include <chrono>
#include <cmath>

#include "smartpower/errors.hpp"
#include "smartpower/gee.hpp"
#include "smartpower/parallel.hpp"
#include "smartpower/rng.hpp"

namespace smartpower {

void PowerConfig::validate() const {
  design.validate();
  grid.validate();
  dep.validate();
  if (grid.T != design.T || grid.K != design.K)
    throw DomainError("PowerConfig: grid layout does not match design");
  if (static_cast<int>(weights.l.size()) != design.T)
    throw DomainError("PowerConfig: weights length must equal T");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("PowerConfig: alpha must lie in (0, 1)");
  if (m < 1) throw DomainError("PowerConfig: m must be positive");
  edtr_index(pair.first);
  edtr_index(pair.second);
}

double implied_responder_rate(const PowerConfig& cfg, int a1) {
  return response_probability(cfg.grid.at(EtsId::first(a1), cfg.design.K),
                              cfg.design.rule);
}

RepOutcome run_replicate(const GenContext& ctx, const PowerConfig& cfg, int n,
                         int replicate) {
  const RngStream stream{
      derive_seed(cfg.master_seed, static_cast<std::uint64_t>(n), replicate)};
  RepOutcome out;
  try {
    const PotentialOutcomes pot = generate_potential_outcomes(ctx, stream);
    const ObservedTrial trial =
        randomize_and_observe(pot, cfg.design, stream);
    const auto rows = build_weighted_replicated_dataset(trial, cfg.design);
    const GeeFit fit = fit_gee(rows, cfg.design);
    const TestResult res = z_test(fit.beta, fit.cov, cfg.pair, cfg.weights,
                                  cfg.design, cfg.alpha);
    out.reject = res.reject;
    out.z = res.z;
    out.delta = res.delta;
    out.var = res.var;
  } catch (const SingularDesignError&) {
    out.status = RepStatus::Singular;
  } catch (const DivergenceError&) {
    out.status = RepStatus::Diverged;
  } catch (const DegenerateVarianceError&) {
    out.status = RepStatus::DegenerateVariance;
  }
  return out;
}

PowerEstimate estimate_power(const PowerConfig& cfg, int n, int threads) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const double p = implied_responder_rate(cfg, +1);
  const double q = implied_responder_rate(cfg, -1);
  const SubgroupSizes sizes = subgroup_sizes(n, p, q, cfg.n4_override);
  const GenContext ctx = prepare_generator(sizes, cfg.design, cfg.grid, cfg.dep);

  PowerEstimate est;
  est.n = n;
  est.m = cfg.m;
  est.replicates.resize(cfg.m);
  parallel_for(cfg.m, threads, [&](int i) {
    est.replicates[i] = run_replicate(ctx, cfg, n, i);
  });

  int rejections = 0;
  for (const auto& rep : est.replicates) {
    if (rep.status != RepStatus::Ok)
      ++est.failed;
    else if (rep.reject)
      ++rejections;
  }
  const int effective = cfg.m - est.failed;
  if (effective <= 0)
    throw NumericError("all replicates failed; no power estimate");
  est.power = static_cast<double>(rejections) / effective;
  est.mc_se = std::sqrt(est.power * (1.0 - est.power) / effective);
  est.elapsed_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return est;
}

std::vector<PowerEstimate> power_curve(const PowerConfig& cfg,
                                       const std::vector<int>& n_grid,
                                       int threads) {
  std::vector<PowerEstimate> curve;
  curve.reserve(n_grid.size());
  for (int n : n_grid) curve.push_back(estimate_power(cfg, n, threads));
  return curve;
}

SampleSizeResult find_sample_size(const PowerConfig& cfg, double target,
                                  const std::vector<int>& n_grid,
                                  int threads) {
  if (!(target > 0.0 && target < 1.0))
    throw DomainError("find_sample_size: target power must lie in (0, 1)");
  if (n_grid.empty())
    throw DomainError("find_sample_size: empty sample size grid");
  SampleSizeResult result;
  result.target = target;
  for (int n : n_grid) {
    result.curve.push_back(estimate_power(cfg, n, threads));
    if (result.curve.back().power >= target) {
      result.n = n;
      break;
    }
  }
  return result;
}

std::vector<SweepPoint> sensitivity_sweep(const PowerConfig& cfg,
                                          SweepAxis axis,
                                          const std::vector<double>& values,
                                          int n, int threads) {
  std::vector<SweepPoint> points;
  points.reserve(values.size());
  for (double v : values) {
    SweepPoint pt;
    pt.value = v;
    PowerConfig local = cfg;
    if (axis == SweepAxis::Eta)
      local.dep.eta = v;
    else
      local.n4_override = static_cast<int>(std::lround(v));
    try {
      pt.estimate = estimate_power(local, n, threads);
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace smartpower
