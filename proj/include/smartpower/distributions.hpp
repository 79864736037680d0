#pragma once

#include <limits>
#include <vector>

namespace smartpower {

/** Negative binomial parametrized by mean and dispersion:
 *  E[Y] = mean, Var[Y] = mean + dispersion * mean^2. */
struct NbParams {
  double mean = 0.0;
  double dispersion = 1.0;
  void validate() const;
};

double nb_log_pmf(int y, const NbParams& p);
double nb_pmf(int y, const NbParams& p);
double nb_cdf(int y, const NbParams& p);

/** Smallest y with CDF(y) >= u. Accepts u in [0, 1]; u == 1 returns the
 *  point where the scanned CDF first exceeds 1 - 1e-13. */
int nb_quantile(double u, const NbParams& p);

/** Zero-inflation-free dispersion recovery: finds the dispersion for which
 *  P(Y = 0) equals pi0 at the given mean. Requires exp(-mean) < pi0 < 1
 *  (the Poisson limit is the floor of achievable zero mass). */
double solve_dispersion_from_zero_mass(double mean, double pi0);

/** End-of-stage-1 responder classification on a count. */
struct ResponseRule {
  enum class Kind { AtMost, GreaterThan, Interval };
  Kind kind = Kind::AtMost;
  int c1 = 0;
  int c2 = 0;  // used by Interval only

  bool responder(int y) const;
  void validate() const;

  static ResponseRule at_most(int c) { return {Kind::AtMost, c, 0}; }
  static ResponseRule greater_than(int c) { return {Kind::GreaterThan, c, 0}; }
  static ResponseRule interval(int lo, int hi) {
    return {Kind::Interval, lo, hi};
  }
};

/** Subset of the nonnegative integers: at most two disjoint intervals.
 *  Covers every response rule region and its complement. */
struct CountRegion {
  static constexpr int kUnbounded = std::numeric_limits<int>::max();
  struct Interval {
    int lo = 0;
    int hi = kUnbounded;
  };
  std::vector<Interval> parts;

  bool contains(int y) const;
  bool bounded() const;
  int upper() const;  // largest member; kUnbounded if open
  static CountRegion everything();
  static CountRegion from_rule(const ResponseRule& rule, bool responder_side);
};

/** Total NB mass inside a region. */
double region_mass(const CountRegion& region, const NbParams& p);

double truncated_nb_pmf(int y, const CountRegion& region, const NbParams& p);
double truncated_nb_cdf(int y, const CountRegion& region, const NbParams& p);
int truncated_nb_quantile(double u, const CountRegion& region,
                          const NbParams& p);

/** P(responder) under the rule for a count with the given parameters. */
double response_probability(const NbParams& p, const ResponseRule& rule);

/** Cumulative lookup table for one (possibly truncated) count marginal.
 *  Built once per column, then inverted by binary search in the hot loop. */
struct CdfTable {
  std::vector<int> values;  // ascending support points
  std::vector<double> cum;  // nondecreasing, back() == 1.0

  int quantile(double u) const;
  static CdfTable build(const NbParams& p, const CountRegion& region);
  static CdfTable build(const NbParams& p) {
    return build(p, CountRegion::everything());
  }
};

}  // namespace smartpower
