#include "smartpower/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smartpower/errors.hpp"

namespace smartpower {

namespace {

constexpr double kTailTol = 1e-13;     // CDF mass we allow to remain unscanned
constexpr double kMinRegionMass = 1e-12;
constexpr int kScanCap = 10'000'000;   // hard stop for runaway scans

// Walks the NB pmf by its term ratio: f(y+1) = f(y) * (r + y) * (1-pi) / (y+1).
struct PmfScan {
  double r;       // 1 / dispersion
  double one_m_pi;
  double term;    // pmf at current y
  int y = 0;

  explicit PmfScan(const NbParams& p) {
    r = 1.0 / p.dispersion;
    one_m_pi = p.mean / (p.mean + r);
    term = std::exp(-r * std::log1p(p.mean / r));  // pi^r
  }
  void advance() {
    term *= (r + y) * one_m_pi / (y + 1);
    ++y;
  }
};

[[noreturn]] void throw_scan_overrun() {
  throw NumericError("count distribution scan exceeded iteration cap");
}

}  // namespace

void NbParams::validate() const {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw DomainError("NbParams: mean must be finite and >= 0");
  if (!(dispersion > 0.0) || !std::isfinite(dispersion))
    throw DomainError("NbParams: dispersion must be finite and > 0");
}

double nb_log_pmf(int y, const NbParams& p) {
  p.validate();
  if (y < 0) throw DomainError("nb_log_pmf: y must be >= 0");
  if (p.mean == 0.0) return y == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double r = 1.0 / p.dispersion;
  const double log_pi = std::log(r) - std::log(p.mean + r);
  const double log_1m_pi = std::log(p.mean) - std::log(p.mean + r);
  return std::lgamma(r + y) - std::lgamma(r) - std::lgamma(y + 1.0) +
         r * log_pi + y * log_1m_pi;
}

double nb_pmf(int y, const NbParams& p) { return std::exp(nb_log_pmf(y, p)); }

double nb_cdf(int y, const NbParams& p) {
  p.validate();
  if (y < 0) return 0.0;
  if (p.mean == 0.0) return 1.0;
  PmfScan scan(p);
  double cdf = scan.term;
  while (scan.y < y) {
    scan.advance();
    cdf += scan.term;
  }
  return std::min(cdf, 1.0);
}

int nb_quantile(double u, const NbParams& p) {
  p.validate();
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("nb_quantile: u must lie in [0, 1]");
  if (p.mean == 0.0) return 0;
  PmfScan scan(p);
  double cdf = scan.term;
  while (cdf < u && cdf < 1.0 - kTailTol) {
    if (scan.y >= kScanCap) throw_scan_overrun();
    scan.advance();
    cdf += scan.term;
  }
  return scan.y;
}

double solve_dispersion_from_zero_mass(double mean, double pi0) {
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw DomainError("solve_dispersion_from_zero_mass: mean must be > 0");
  const double floor = std::exp(-mean);
  if (!(pi0 < 1.0) || !(pi0 > floor)) {
    std::ostringstream msg;
    msg << "zero proportion " << pi0 << " is not achievable at mean " << mean
        << ": must exceed the Poisson floor exp(-mean) = " << floor
        << " and be < 1";
    throw DomainError(msg.str());
  }
  // P(Y=0) = (1 + zeta*mean)^(-1/zeta) is strictly increasing in zeta.
  auto p0 = [mean](double zeta) {
    return std::exp(-std::log1p(zeta * mean) / zeta);
  };
  double lo = 1e-8, hi = 1e4;
  if (pi0 <= p0(lo)) return lo;
  if (pi0 >= p0(hi))
    throw DomainError("zero proportion above the supported dispersion range");
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (p0(mid) < pi0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool ResponseRule::responder(int y) const {
  switch (kind) {
    case Kind::AtMost: return y <= c1;
    case Kind::GreaterThan: return y > c1;
    case Kind::Interval: return y >= c1 && y <= c2;
  }
  return false;
}

void ResponseRule::validate() const {
  switch (kind) {
    case Kind::AtMost:
    case Kind::GreaterThan:
      if (c1 < 0) throw DomainError("ResponseRule: cutoff must be >= 0");
      return;
    case Kind::Interval:
      if (c1 < 0 || c2 < c1)
        throw DomainError("ResponseRule: interval must satisfy 0 <= lo <= hi");
      return;
  }
  throw DomainError("ResponseRule: unknown kind");
}

bool CountRegion::contains(int y) const {
  for (const auto& part : parts)
    if (y >= part.lo && y <= part.hi) return true;
  return false;
}

bool CountRegion::bounded() const {
  for (const auto& part : parts)
    if (part.hi == kUnbounded) return false;
  return true;
}

int CountRegion::upper() const {
  int hi = -1;
  for (const auto& part : parts) {
    if (part.hi == kUnbounded) return kUnbounded;
    hi = std::max(hi, part.hi);
  }
  return hi;
}

CountRegion CountRegion::everything() { return {{{0, kUnbounded}}}; }

CountRegion CountRegion::from_rule(const ResponseRule& rule,
                                   bool responder_side) {
  rule.validate();
  CountRegion region;
  switch (rule.kind) {
    case ResponseRule::Kind::AtMost:
      if (responder_side)
        region.parts = {{0, rule.c1}};
      else
        region.parts = {{rule.c1 + 1, kUnbounded}};
      break;
    case ResponseRule::Kind::GreaterThan:
      if (responder_side)
        region.parts = {{rule.c1 + 1, kUnbounded}};
      else
        region.parts = {{0, rule.c1}};
      break;
    case ResponseRule::Kind::Interval:
      if (responder_side) {
        region.parts = {{rule.c1, rule.c2}};
      } else {
        if (rule.c1 > 0) region.parts.push_back({0, rule.c1 - 1});
        region.parts.push_back({rule.c2 + 1, kUnbounded});
      }
      break;
  }
  return region;
}

double region_mass(const CountRegion& region, const NbParams& p) {
  p.validate();
  if (region.parts.empty()) return 0.0;
  if (p.mean == 0.0) return region.contains(0) ? 1.0 : 0.0;
  const int hard_stop = region.bounded() ? region.upper() : kScanCap;
  PmfScan scan(p);
  double total = scan.term;
  double inside = region.contains(0) ? scan.term : 0.0;
  while (scan.y < hard_stop && total < 1.0 - kTailTol) {
    scan.advance();
    total += scan.term;
    if (region.contains(scan.y)) inside += scan.term;
  }
  if (!region.bounded() && scan.y >= kScanCap) throw_scan_overrun();
  // Open-tail region: whatever mass the scan did not reach belongs to it.
  if (!region.bounded()) inside += std::max(0.0, 1.0 - total);
  return std::min(inside, 1.0);
}

double truncated_nb_pmf(int y, const CountRegion& region, const NbParams& p) {
  const double mass = region_mass(region, p);
  if (mass < kMinRegionMass)
    throw DegenerateRegionError("truncation region has ~zero probability mass");
  if (y < 0 || !region.contains(y)) return 0.0;
  return nb_pmf(y, p) / mass;
}

double truncated_nb_cdf(int y, const CountRegion& region, const NbParams& p) {
  const double mass = region_mass(region, p);
  if (mass < kMinRegionMass)
    throw DegenerateRegionError("truncation region has ~zero probability mass");
  if (y < 0) return 0.0;
  if (p.mean == 0.0) return region.contains(0) ? 1.0 : 0.0;
  PmfScan scan(p);
  double inside = region.contains(0) && y >= 0 ? scan.term : 0.0;
  double total = scan.term;
  while (scan.y < y && total < 1.0 - kTailTol) {
    if (scan.y >= kScanCap) throw_scan_overrun();
    scan.advance();
    total += scan.term;
    if (region.contains(scan.y)) inside += scan.term;
  }
  return std::min(inside / mass, 1.0);
}

int truncated_nb_quantile(double u, const CountRegion& region,
                          const NbParams& p) {
  if (!(u >= 0.0 && u <= 1.0))
    throw DomainError("truncated_nb_quantile: u must lie in [0, 1]");
  const CdfTable table = CdfTable::build(p, region);
  return table.quantile(u);
}

double response_probability(const NbParams& p, const ResponseRule& rule) {
  return region_mass(CountRegion::from_rule(rule, true), p);
}

int CdfTable::quantile(double u) const {
  const auto it = std::lower_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) return values.back();
  return values[static_cast<size_t>(it - cum.begin())];
}

CdfTable CdfTable::build(const NbParams& p, const CountRegion& region) {
  p.validate();
  if (region.parts.empty())
    throw DegenerateRegionError("empty truncation region");
  CdfTable table;
  if (p.mean == 0.0) {
    if (!region.contains(0))
      throw DegenerateRegionError(
          "degenerate count (mean 0) excluded by truncation region");
    table.values = {0};
    table.cum = {1.0};
    return table;
  }
  const int hard_stop = region.bounded() ? region.upper() : kScanCap;
  PmfScan scan(p);
  double total = scan.term;
  std::vector<double> mass;
  if (region.contains(0)) {
    table.values.push_back(0);
    mass.push_back(scan.term);
  }
  while (scan.y < hard_stop && total < 1.0 - kTailTol) {
    scan.advance();
    total += scan.term;
    if (region.contains(scan.y)) {
      table.values.push_back(scan.y);
      mass.push_back(scan.term);
    }
  }
  if (!region.bounded() && scan.y >= kScanCap) throw_scan_overrun();
  double z = 0.0;
  for (double m : mass) z += m;
  if (z < kMinRegionMass)
    throw DegenerateRegionError("truncation region has ~zero probability mass");
  table.cum.resize(mass.size());
  double acc = 0.0;
  for (size_t i = 0; i < mass.size(); ++i) {
    acc += mass[i];
    table.cum[i] = acc / z;
  }
  table.cum.back() = 1.0;
  return table;
}

}  // namespace smartpower
