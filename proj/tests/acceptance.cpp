// End-to-end acceptance checks. Each numbered check prints exactly one
// PASS/FAIL line with the measured values inline; the process exits nonzero
// if any check fails. Scales are desk-sized (minutes, single core); all
// tolerances are pinned here, next to the check that uses them.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "smartpower/calibration.hpp"
#include "smartpower/config.hpp"
#include "smartpower/contrast.hpp"
#include "smartpower/distributions.hpp"
#include "smartpower/gee.hpp"
#include "smartpower/power.hpp"
#include "smartpower/trial.hpp"

using namespace smartpower;

namespace {

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

PowerConfig pcfg(const std::string& name, ContrastWeights::Kind kind, int m) {
  StudyConfig sc = preset(name);
  sc.estimand = kind;
  sc.m = m;
  return make_power_config(sc);
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

// Largest drop between consecutive powers beyond the Monte Carlo tolerance
// 2*sqrt(se_k^2 + se_{k+1}^2); <= 0 means the sequence is nondecreasing up
// to noise.
double worst_dip(const std::vector<PowerEstimate>& seq) {
  double worst = -1.0;
  for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
    const double tol = 2.0 * std::hypot(seq[k].mc_se, seq[k + 1].mc_se);
    worst = std::max(worst, seq[k].power - seq[k + 1].power - tol);
  }
  return worst;
}

std::string joined(const std::vector<PowerEstimate>& seq) {
  std::string out;
  char buf[16];
  for (const auto& e : seq) {
    std::snprintf(buf, sizeof(buf), "%s%.3f", out.empty() ? "" : " ", e.power);
    out += buf;
  }
  return out;
}

}  // namespace

int main() {
  bool all = true;

  // ---- 1. dispersion solver anchors ----
  {
    const auto t0 = Clock::now();
    const double tol = 0.01;
    const double z1 = solve_dispersion_from_zero_mass(2.5, 0.40);
    const double z2 = solve_dispersion_from_zero_mass(4.8, 0.40);
    const double z3 = solve_dispersion_from_zero_mass(2.5, 0.60);
    const double z4 = solve_dispersion_from_zero_mass(2.8, 0.40);
    const double el = secs_since(t0);
    const bool ok = std::fabs(z1 - 1.92) <= tol && std::fabs(z2 - 2.98) <= tol &&
                    std::fabs(z3 - 5.15) <= tol && std::fabs(z4 - 2.11) <= tol &&
                    el < 1.0;
    all &= ok;
    std::printf(
        "[1] %s dispersion anchors: zeta(2.5,.40)=%.4f zeta(4.8,.40)=%.4f "
        "zeta(2.5,.60)=%.4f zeta(2.8,.40)=%.4f (want 1.92/2.98/5.15/2.11 "
        "+/-%.2f, %.3fs)\n",
        verdict(ok), z1, z2, z3, z4, tol, el);
  }

  // ---- 2. true effect ladder across the ten effect presets ----
  {
    const auto t0 = Clock::now();
    const double tol_eos = 0.005, tol_auc = 0.01;
    const double auc_anchor[10] = {0.70, 1.41, 2.11, 2.81, 3.52,
                                   4.22, 4.92, 5.63, 6.33, 7.03};
    double worst_e = 0.0, worst_a = 0.0;
    for (int k = 1; k <= 10; ++k) {
      const PowerConfig cfg = pcfg("table3-scenario-" + std::to_string(k),
                                   ContrastWeights::Kind::EndOfStudy, 1);
      const double d_eos =
          true_delta(cfg.grid, cfg.design,
                     ContrastWeights::end_of_study(cfg.design.T), cfg.pair);
      const double d_auc = true_delta(
          cfg.grid, cfg.design, ContrastWeights::auc(cfg.design.times), cfg.pair);
      worst_e = std::max(worst_e, std::fabs(d_eos - 0.28 * k));
      worst_a = std::max(worst_a, std::fabs(d_auc - auc_anchor[k - 1]));
    }
    const double el = secs_since(t0);
    const bool ok = worst_e <= tol_eos && worst_a <= tol_auc && el < 1.0;
    all &= ok;
    std::printf(
        "[2] %s effect ladder k=1..10: EOS max dev from 0.28k = %.5f "
        "(tol %.3f), AUC max dev from anchors = %.5f (tol %.2f) (%.3fs)\n",
        verdict(ok), worst_e, tol_eos, worst_a, tol_auc, el);
  }

  // ---- 3. latent-rho -> tau_max calibration map, both structures ----
  {
    const auto t0 = Clock::now();
    const double tol = 0.03;
    const double anchor[3] = {0.15, 0.32, 0.52};
    const double rhos[3] = {0.2, 0.4, 0.6};
    const StudyConfig sc = preset("table3-scenario-10");
    const EtsGrid grid = resolve_grid(sc);
    bool ok = true;
    char detail[256];
    std::string lines;
    for (const auto s : {CorrStructure::AR1, CorrStructure::Exchangeable}) {
      double tau[3];
      for (int i = 0; i < 3; ++i) {
        tau[i] = estimate_tau_max(sc.design, grid,
                                  DependenceSpec::make(s, rhos[i]), 1000, 1000,
                                  sc.seed, 0)
                     .mean;
        ok &= std::fabs(tau[i] - anchor[i]) <= tol;
      }
      ok &= tau[0] < tau[1] && tau[1] < tau[2];
      std::snprintf(detail, sizeof(detail), " %s %.4f/%.4f/%.4f",
                    s == CorrStructure::AR1 ? "ar1" : "exch", tau[0], tau[1],
                    tau[2]);
      lines += detail;
    }
    const double el = secs_since(t0);
    ok &= el < 600.0;
    all &= ok;
    std::printf(
        "[3] %s tau_max calibration (M=1000, n*=1000):%s (want 0.15/0.32/0.52 "
        "+/-%.2f, monotone, %.1fs)\n",
        verdict(ok), lines.c_str(), tol, el);
  }

  // ---- 4. type-I error under the three null grids ----
  {
    const auto t0 = Clock::now();
    double eos[3];
    bool ok = true;
    for (int s = 1; s <= 3; ++s) {
      const PowerConfig cfg = pcfg("webtable6-scenario-" + std::to_string(s),
                                   ContrastWeights::Kind::EndOfStudy, 1000);
      eos[s - 1] = estimate_power(cfg, 500, 0).power;
      ok &= eos[s - 1] >= 0.04 && eos[s - 1] <= 0.08;
    }
    // Small-sample AUC at N=150. The saturated-model test sits at nominal
    // level here (see the variance check in [8c]), so the band admits the
    // nominal side as well as the inflated one: [0.04, 0.10].
    const PowerConfig cfg =
        pcfg("webtable6-scenario-3", ContrastWeights::Kind::Auc, 1000);
    const double auc = estimate_power(cfg, 150, 0).power;
    ok &= auc >= 0.04 && auc <= 0.10;
    const double el = secs_since(t0);
    all &= ok;
    std::printf(
        "[4] %s type-I error (M=1000): EOS N=500 = %.4f/%.4f/%.4f (band "
        "[0.04,0.08]), AUC N=150 = %.4f (band [0.04,0.10]) (%.1fs)\n",
        verdict(ok), eos[0], eos[1], eos[2], auc, el);
  }

  // ---- 5. power is monotone in effect size and in N ----
  {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (const auto kind :
         {ContrastWeights::Kind::EndOfStudy, ContrastWeights::Kind::Auc}) {
      std::vector<PowerEstimate> seq;
      for (int k = 1; k <= 10; ++k)
        seq.push_back(estimate_power(
            pcfg("table3-scenario-" + std::to_string(k), kind, 500), 500, 0));
      ok &= worst_dip(seq) <= 0.0;
      detail += (kind == ContrastWeights::Kind::Auc ? " | AUC " : "EOS ") +
                joined(seq);
    }
    std::vector<PowerEstimate> by_n;
    for (const int n : {100, 300, 550})
      by_n.push_back(estimate_power(
          pcfg("table3-scenario-6", ContrastWeights::Kind::EndOfStudy, 500), n,
          0));
    ok &= worst_dip(by_n) <= 0.0;
    const double el = secs_since(t0);
    all &= ok;
    std::printf(
        "[5] %s power monotone (M=500): %s | scen6 N=100/300/550 %s "
        "(dips allowed up to 2*mc_se, %.1fs)\n",
        verdict(ok), detail.c_str(), joined(by_n).c_str(), el);
  }

  // ---- 6. count-scale correlation shape under both structures ----
  {
    const auto t0 = Clock::now();
    const StudyConfig sc = preset("table3-scenario-10");
    const EtsGrid grid = resolve_grid(sc);
    bool ok = true;
    std::string lines;
    char detail[256];
    for (const auto s : {CorrStructure::AR1, CorrStructure::Exchangeable}) {
      const PathCorrelations pcs = empirical_path_correlations(
          sc.design, grid, DependenceSpec::make(s, 0.6), 500, 1000, sc.seed, 0);
      double overall_max = -1.0, lag1_lo = 2.0, lag1_hi = -1.0;
      double est_lo = 2.0, est_hi = -1.0, lag1_sum = 0, lag2_sum = 0;
      int lag1_n = 0, lag2_n = 0;
      for (std::size_t p = 0; p < pcs.corr.size(); ++p) {
        const bool responder = (p == 0 || p == 3);
        for (int a = 0; a < 6; ++a)
          for (int b = a + 1; b < 6; ++b) {
            const double v = pcs.corr[p](a, b);
            overall_max = std::max(overall_max, v);
            // The occasion-K slot on responder paths is the truncation
            // constant, so its pairs are inestimable and reported as 0.
            if (responder && (a == 1 || b == 1)) continue;
            est_lo = std::min(est_lo, v);
            est_hi = std::max(est_hi, v);
            if (b == a + 1) { lag1_sum += v; ++lag1_n; }
            if (b == a + 2) { lag2_sum += v; ++lag2_n; }
            if (b == a + 1) {
              lag1_lo = std::min(lag1_lo, v);
              lag1_hi = std::max(lag1_hi, v);
            }
          }
      }
      ok &= overall_max < 0.6;
      if (s == CorrStructure::AR1) {
        ok &= lag1_lo >= 0.45 && lag1_hi <= 0.58;
        // geometric decay: lag-2 well below lag-1
        ok &= lag2_sum / lag2_n <= lag1_sum / lag1_n - 0.10;
      } else {
        // near-exchangeable: estimable entries sit in a narrow band
        ok &= est_hi - est_lo <= 0.10;
      }
      std::snprintf(detail, sizeof(detail),
                    " %s max=%.3f lag1=[%.3f,%.3f] mean1=%.3f mean2=%.3f "
                    "spread=%.3f",
                    s == CorrStructure::AR1 ? "ar1" : "exch", overall_max,
                    lag1_lo, lag1_hi, lag1_sum / lag1_n, lag2_sum / lag2_n,
                    est_hi - est_lo);
      lines += detail;
    }
    const double el = secs_since(t0);
    all &= ok;
    std::printf(
        "[6] %s correlation shape at rho=0.6 (M=500, n*=1000):%s (max<0.6, "
        "ar1 lag1 in [0.45,0.58] with decay, exch spread<=0.10, %.1fs)\n",
        verdict(ok), lines.c_str(), el);
  }

  // ---- 7. power is flat across eta and across n4 ----
  {
    const auto t0 = Clock::now();
    // The eta grid is only positive definite under AR1 at rho=0.6 (the
    // exchangeable structure needs eta near rho), so both sweeps run AR1.
    StudyConfig sc = preset("table3-scenario-5");
    sc.structure = CorrStructure::AR1;
    sc.m = 500;
    const PowerConfig cfg = make_power_config(sc);
    std::vector<double> etas;
    for (int i = 0; i <= 9; ++i) etas.push_back(0.05 * i);
    bool ok = true;
    double ranges[2] = {0, 0};
    int axis = 0;
    for (const auto& pts :
         {sensitivity_sweep(cfg, SweepAxis::Eta, etas, 500, 0),
          sensitivity_sweep(cfg, SweepAxis::N4, {100, 150, 200, 250, 300}, 500,
                            0)}) {
      double lo = 2.0, hi = -1.0;
      for (const auto& pt : pts) {
        if (!pt.estimate) {
          ok = false;
          continue;
        }
        lo = std::min(lo, pt.estimate->power);
        hi = std::max(hi, pt.estimate->power);
      }
      ranges[axis++] = hi - lo;
      ok &= hi - lo <= 0.06;
    }
    const double el = secs_since(t0);
    all &= ok;
    std::printf(
        "[7] %s flat sensitivity (ar1 rho=0.6, M=500, N=500): eta range=%.3f "
        "over {0,...,0.45}, n4 range=%.3f over {100,...,300} (tol 0.06, all "
        "points estimable, %.1fs)\n",
        verdict(ok), ranges[0], ranges[1], el);
  }

  // ---- 8. estimator, gradient, and variance correctness ----
  {
    const auto t0 = Clock::now();
    const StudyConfig sc = preset("table3-scenario-5");
    const PowerConfig cfg = make_power_config(sc);
    const double p = implied_responder_rate(cfg, +1);
    const double q = implied_responder_rate(cfg, -1);

    // (a) fitted regimen means vs the generative mixture at N=1e5, averaged
    // over four replicate streams to push sampling noise well under the
    // 1% bound.
    const int N = 100000, reps = 4;
    const GenContext ctx =
        prepare_generator(subgroup_sizes(N, p, q), cfg.design, cfg.grid, cfg.dep);
    std::vector<Eigen::VectorXd> mean_fit(4, Eigen::VectorXd::Zero(cfg.design.T));
    for (int rep = 0; rep < reps; ++rep) {
      const RngStream stream{derive_seed(cfg.master_seed,
                                         static_cast<std::uint64_t>(N),
                                         static_cast<std::uint64_t>(rep))};
      const ObservedTrial trial = randomize_and_observe(
          generate_potential_outcomes(ctx, stream), cfg.design, stream);
      const GeeFit big = fit_gee(
          build_weighted_replicated_dataset(trial, cfg.design), cfg.design);
      for (int e = 0; e < 4; ++e)
        mean_fit[e] +=
            (selector_matrix(e, cfg.design) * big.beta).array().exp().matrix() /
            reps;
    }
    double worst_l2 = 0.0;
    for (int e = 0; e < 4; ++e) {
      const auto truth =
          edtr_mean_trajectory(cfg.grid, cfg.design, edtr_from_index(e));
      double num = 0.0, den = 0.0;
      for (int j = 0; j < cfg.design.T; ++j) {
        num += (mean_fit[e][j] - truth[j]) * (mean_fit[e][j] - truth[j]);
        den += truth[j] * truth[j];
      }
      worst_l2 = std::max(worst_l2, std::sqrt(num / den));
    }
    const bool ok_a = worst_l2 <= 0.01;

    // (b) analytic contrast gradient vs central differences on a real fit
    const RngStream stream{derive_seed(cfg.master_seed, 2000u, 0u)};
    const GenContext small_ctx = prepare_generator(subgroup_sizes(2000, p, q),
                                                   cfg.design, cfg.grid, cfg.dep);
    const GeeFit fit = fit_gee(
        build_weighted_replicated_dataset(
            randomize_and_observe(generate_potential_outcomes(small_ctx, stream),
                                  cfg.design, stream),
            cfg.design),
        cfg.design);
    double worst_rel = 0.0;
    const double h = 1e-6;
    for (const auto kind :
         {ContrastWeights::Kind::EndOfStudy, ContrastWeights::Kind::Auc}) {
      const ContrastWeights w = kind == ContrastWeights::Kind::Auc
                                    ? ContrastWeights::auc(cfg.design.times)
                                    : ContrastWeights::end_of_study(cfg.design.T);
      const Eigen::VectorXd g =
          contrast_gradient(fit.beta, cfg.pair, w, cfg.design);
      const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-12);
      for (int i = 0; i < g.size(); ++i) {
        Eigen::VectorXd up = fit.beta, dn = fit.beta;
        up[i] += h;
        dn[i] -= h;
        const double fd = (contrast_value(up, cfg.pair, w, cfg.design) -
                           contrast_value(dn, cfg.pair, w, cfg.design)) /
                          (2.0 * h);
        worst_rel = std::max(worst_rel, std::fabs(g[i] - fd) / scale);
      }
    }
    const bool ok_b = worst_rel <= 1e-6;

    // (c) sandwich SE vs the empirical SD of delta_hat across 2000 null
    // replicates; the AUC small-sample bias must fade as N grows.
    double ratio[3];
    int idx = 0;
    for (const auto& [kind, n] :
         std::vector<std::pair<ContrastWeights::Kind, int>>{
             {ContrastWeights::Kind::EndOfStudy, 500},
             {ContrastWeights::Kind::Auc, 150},
             {ContrastWeights::Kind::Auc, 500}}) {
      const PowerEstimate est =
          estimate_power(pcfg("webtable6-scenario-2", kind, 2000), n, 0);
      double sum = 0.0, sumsq = 0.0, sumse = 0.0;
      int m_ok = 0;
      for (const auto& r : est.replicates) {
        if (r.status != RepStatus::Ok) continue;
        sum += r.delta;
        sumsq += r.delta * r.delta;
        sumse += std::sqrt(r.var);
        ++m_ok;
      }
      const double sd = std::sqrt((sumsq - sum * sum / m_ok) / (m_ok - 1));
      ratio[idx++] = sd / (sumse / m_ok);
    }
    const bool ok_c = ratio[0] >= 0.9 && ratio[0] <= 1.1 && ratio[2] >= 0.9 &&
                      ratio[2] <= 1.1 &&
                      std::fabs(1.0 - ratio[2]) <= std::fabs(1.0 - ratio[1]) + 0.02;

    const double el = secs_since(t0);
    const bool ok = ok_a && ok_b && ok_c;
    all &= ok;
    std::printf(
        "[8] %s estimator checks: (a) worst regimen L2 rel err %.5f at N=1e5 "
        "(tol 0.01) (b) gradient vs FD rel %.2e (tol 1e-6) (c) sd/se EOS "
        "N=500 %.4f, AUC N=150 %.4f -> N=500 %.4f (EOS and AUC@500 in "
        "[0.9,1.1], bias shrinking) (%.1fs)\n",
        verdict(ok), worst_l2, worst_rel, ratio[0], ratio[1], ratio[2], el);
  }

  // ---- 9. determinism across worker counts; full-size point runtime ----
  {
    const auto t0 = Clock::now();
    const PowerConfig cfg =
        pcfg("table3-scenario-5", ContrastWeights::Kind::EndOfStudy, 200);
    const PowerEstimate base = estimate_power(cfg, 300, 1);
    bool ok = true;
    for (const int workers : {4, 8}) {
      const PowerEstimate alt = estimate_power(cfg, 300, workers);
      ok &= same_bits(base.power, alt.power) &&
            same_bits(base.mc_se, alt.mc_se) && base.failed == alt.failed &&
            base.replicates.size() == alt.replicates.size();
      if (!ok) break;
      for (std::size_t i = 0; i < base.replicates.size(); ++i) {
        const RepOutcome &x = base.replicates[i], &y = alt.replicates[i];
        ok &= x.status == y.status && x.reject == y.reject &&
              same_bits(x.z, y.z) && same_bits(x.delta, y.delta) &&
              same_bits(x.var, y.var);
      }
    }
    const auto t1 = Clock::now();
    const PowerEstimate big = estimate_power(
        pcfg("table3-scenario-5", ContrastWeights::Kind::EndOfStudy, 5000), 550,
        0);
    const double el_big = secs_since(t1);
    ok &= el_big < 900.0;
    all &= ok;
    std::printf(
        "[9] %s determinism and runtime: workers 1/4/8 bit-identical, "
        "M=5000 N=550 power=%.4f in %.1fs (budget 900s) (%.1fs total)\n",
        verdict(ok), big.power, el_big, secs_since(t0));
  }

  std::printf("acceptance: %s\n", all ? "all checks passed" : "FAILURES above");
  return all ? 0 : 1;
}
