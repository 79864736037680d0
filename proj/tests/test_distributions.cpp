#include "doctest.h"
#include "oracles.hpp"
#include "smartpower/distributions.hpp"
#include "smartpower/errors.hpp"

#include <cmath>
#include <initializer_list>

using namespace smartpower;

TEST_CASE("pmf agrees with the term-by-term recurrence oracle") {
  for (double mu : {0.3, 1.0, 2.5, 4.8, 9.7}) {
    for (double zeta : {0.2, 1.0, 1.92, 2.98, 6.91}) {
      const auto table = oracle::nb_pmf_table(mu, zeta, 40);
      for (int y : {0, 1, 2, 3, 7, 15, 40}) {
        CHECK(nb_pmf(y, {mu, zeta}) ==
              doctest::Approx(table[y]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("zero mass at the anchor parameters is 0.40") {
  CHECK(nb_pmf(0, {2.5, 1.92}) == doctest::Approx(0.40).epsilon(0.005));
  CHECK(nb_cdf(0, {2.5, 1.92}) == doctest::Approx(0.40).epsilon(0.005));
}

TEST_CASE("degenerate mean gives a point mass at zero") {
  CHECK(nb_pmf(0, {0.0, 1.0}) == doctest::Approx(1.0));
  CHECK(nb_pmf(3, {0.0, 1.0}) == doctest::Approx(0.0));
  CHECK(nb_quantile(0.99, {0.0, 1.0}) == 0);
}

TEST_CASE("cdf sums the pmf and approaches one") {
  const NbParams p{4.8, 2.98};
  CHECK(nb_cdf(5, p) == doctest::Approx(oracle::nb_cdf(4.8, 2.98, 5))
                            .epsilon(1e-12));
  CHECK(nb_cdf(100000, p) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("quantile is the generalized inverse of the cdf") {
  const NbParams p{2.8, 2.11};
  CHECK(nb_quantile(0.0, p) == 0);
  CHECK(nb_quantile(0.39, p) == 0);  // P(0) ~ 0.400
  for (double u : {0.001, 0.25, 0.5, 0.77, 0.995}) {
    const int y = nb_quantile(u, p);
    CHECK(y == oracle::nb_quantile(2.8, 2.11, u));
    CHECK(nb_cdf(y, p) >= u);
    if (y > 0) CHECK(nb_cdf(y - 1, p) < u);
  }
}

TEST_CASE("parameter domain is enforced") {
  CHECK_THROWS_AS(nb_pmf(0, {-1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(nb_pmf(0, {1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(nb_pmf(-1, {1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(nb_quantile(1.5, {1.0, 1.0}), DomainError);
}

TEST_CASE("dispersion solver recovers the anchor values") {
  CHECK(solve_dispersion_from_zero_mass(2.5, 0.40) ==
        doctest::Approx(1.92).epsilon(0.01 / 1.92));
  CHECK(solve_dispersion_from_zero_mass(4.8, 0.40) ==
        doctest::Approx(2.98).epsilon(0.01 / 2.98));
  CHECK(solve_dispersion_from_zero_mass(2.5, 0.60) ==
        doctest::Approx(5.15).epsilon(0.01 / 5.15));
  CHECK(solve_dispersion_from_zero_mass(2.8, 0.40) ==
        doctest::Approx(2.11).epsilon(0.01 / 2.11));
}

TEST_CASE("dispersion solver round-trips over a parameter sweep") {
  for (double mu : {0.5, 1.0, 2.5, 5.0, 10.0}) {
    for (double zeta : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double pi0 = std::exp(-std::log1p(zeta * mu) / zeta);
      const double back = solve_dispersion_from_zero_mass(mu, pi0);
      CHECK(back == doctest::Approx(zeta).epsilon(1e-6));
    }
  }
}

TEST_CASE("dispersion solver rejects unreachable zero masses") {
  // Poisson floor at mu = 2.5 is exp(-2.5) ~ 0.0821
  CHECK_THROWS_AS(solve_dispersion_from_zero_mass(2.5, 0.05), DomainError);
  CHECK_THROWS_AS(solve_dispersion_from_zero_mass(2.5, std::exp(-2.5)),
                  DomainError);
  CHECK_THROWS_AS(solve_dispersion_from_zero_mass(2.5, 1.0), DomainError);
  try {
    solve_dispersion_from_zero_mass(2.5, 0.05);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    // diagnostic must state the floor
    CHECK(std::string(e.what()).find("0.082") != std::string::npos);
  }
}

TEST_CASE("response regions cover rules and complements") {
  const auto at_most = ResponseRule::at_most(2);
  const auto resp = CountRegion::from_rule(at_most, true);
  const auto nonresp = CountRegion::from_rule(at_most, false);
  for (int y = 0; y <= 10; ++y) {
    CHECK(resp.contains(y) == (y <= 2));
    CHECK(nonresp.contains(y) == (y > 2));
  }
  const auto gt = ResponseRule::greater_than(1);
  CHECK(CountRegion::from_rule(gt, true).contains(2));
  CHECK_FALSE(CountRegion::from_rule(gt, true).contains(1));
  CHECK(CountRegion::from_rule(gt, false).contains(1));

  const auto iv = ResponseRule::interval(2, 4);
  const auto iv_resp = CountRegion::from_rule(iv, true);
  const auto iv_non = CountRegion::from_rule(iv, false);
  for (int y = 0; y <= 10; ++y) {
    CHECK(iv_resp.contains(y) == (y >= 2 && y <= 4));
    CHECK(iv_non.contains(y) == (y < 2 || y > 4));
  }
}

TEST_CASE("region masses are complementary") {
  const NbParams p{4.8, 2.98};
  for (const auto& rule :
       {ResponseRule::at_most(0), ResponseRule::at_most(3),
        ResponseRule::greater_than(2), ResponseRule::interval(1, 5)}) {
    const double a = region_mass(CountRegion::from_rule(rule, true), p);
    const double b = region_mass(CountRegion::from_rule(rule, false), p);
    CHECK(a + b == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("response probability at the anchor point") {
  CHECK(response_probability({4.8, 2.98}, ResponseRule::at_most(0)) ==
        doctest::Approx(0.40).epsilon(0.005));
  CHECK(response_probability({4.8, 2.98}, ResponseRule::interval(0, 2)) ==
        doctest::Approx(nb_cdf(2, {4.8, 2.98})).epsilon(1e-12));
}

TEST_CASE("truncated pmf renormalizes within the region") {
  const NbParams p{2.5, 1.92};
  const CountRegion positive = CountRegion::from_rule(
      ResponseRule::at_most(0), false);  // y > 0
  double total = 0.0;
  for (int y = 1; y <= 400; ++y) {
    const double f = truncated_nb_pmf(y, positive, p);
    CHECK(f == doctest::Approx(oracle::zero_truncated_pmf(2.5, 1.92, y))
                   .epsilon(1e-10));
    total += f;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(truncated_nb_pmf(0, positive, p) == 0.0);
}

TEST_CASE("truncation over the full support changes nothing") {
  const NbParams p{2.5, 1.92};
  const auto all = CountRegion::everything();
  for (int y : {0, 1, 5, 12})
    CHECK(truncated_nb_pmf(y, all, p) ==
          doctest::Approx(nb_pmf(y, p)).epsilon(1e-12));
  for (double u : {0.05, 0.4, 0.9})
    CHECK(truncated_nb_quantile(u, all, p) == nb_quantile(u, p));
}

TEST_CASE("point-mass region from an at-most-zero responder rule") {
  const NbParams p{4.8, 2.98};
  const auto zero_only =
      CountRegion::from_rule(ResponseRule::at_most(0), true);
  CHECK(truncated_nb_pmf(0, zero_only, p) == doctest::Approx(1.0));
  CHECK(truncated_nb_quantile(0.0, zero_only, p) == 0);
  CHECK(truncated_nb_quantile(0.999999, zero_only, p) == 0);
  const auto table = CdfTable::build(p, zero_only);
  REQUIRE(table.values.size() == 1);
  CHECK(table.values[0] == 0);
  CHECK(table.cum[0] == 1.0);
}

TEST_CASE("zero-mass regions are rejected") {
  // P(Y = 0) at mu = 1e6, zeta = 0.01 is astronomically small
  const NbParams p{1e6, 0.01};
  const auto zero_only =
      CountRegion::from_rule(ResponseRule::at_most(0), true);
  CHECK_THROWS_AS(CdfTable::build(p, zero_only), DegenerateRegionError);
  CHECK_THROWS_AS(truncated_nb_pmf(0, zero_only, p), DegenerateRegionError);
}

TEST_CASE("truncated cdf and quantile are consistent") {
  const NbParams p{2.7, 2.05};
  const auto region = CountRegion::from_rule(ResponseRule::at_most(0), false);
  for (double u : {0.01, 0.3, 0.62, 0.97}) {
    const int y = truncated_nb_quantile(u, region, p);
    CHECK(region.contains(y));
    CHECK(truncated_nb_cdf(y, region, p) >= doctest::Approx(u));
    CHECK(truncated_nb_cdf(y - 1, region, p) < u);
  }
}

TEST_CASE("cdf tables invert exactly like the scan quantile") {
  const NbParams p{4.8, 2.98};
  const auto table = CdfTable::build(p);
  for (double u = 0.005; u < 1.0; u += 0.005) {
    CHECK(table.quantile(u) == nb_quantile(u, p));
  }
  CHECK(table.cum.back() == 1.0);
  CHECK(table.quantile(1.0) == table.values.back());
}
