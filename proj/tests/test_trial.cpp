#include "doctest.h"
#include "smartpower/config.hpp"
#include "smartpower/distributions.hpp"
#include "smartpower/errors.hpp"
#include "smartpower/power.hpp"
#include "smartpower/trial.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <set>
#include <vector>

using namespace smartpower;

TEST_CASE("subgroup sizes at the default (maximal) n4") {
  const SubgroupSizes a = subgroup_sizes(500, 0.4, 0.4);
  CHECK(a.n1 == 200);
  CHECK(a.n2 == 0);
  CHECK(a.n3 == 0);
  CHECK(a.n4 == 300);
  CHECK(a.total() == 500);

  const SubgroupSizes b = subgroup_sizes(500, 0.4, 0.6);
  CHECK(b.n1 == 200);
  CHECK(b.n2 == 0);
  CHECK(b.n3 == 100);
  CHECK(b.n4 == 200);
  CHECK(b.total() == 500);
}

TEST_CASE("subgroup sizes honor a feasible n4 override") {
  const SubgroupSizes s = subgroup_sizes(500, 0.4, 0.4, 150);
  CHECK(s.n1 == 50);
  CHECK(s.n2 == 150);
  CHECK(s.n3 == 150);
  CHECK(s.n4 == 150);
  CHECK(s.total() == 500);
}

TEST_CASE("boundary n4 overrides survive root-search jitter in p and q") {
  // Rates produced by the dispersion root search sit a few parts in 1e9 off
  // 0.40, which used to push n4 = n4_max (and the n1 = 0 boundary) into the
  // infeasible branch at larger N.
  const double zeta = solve_dispersion_from_zero_mass(2.5, 0.40);
  const double p = response_probability({2.5, zeta}, ResponseRule::at_most(0));

  const SubgroupSizes lo = subgroup_sizes(500, p, p, 100);
  CHECK(lo.n1 == 0);
  CHECK(lo.n2 == 200);
  CHECK(lo.n3 == 200);
  CHECK(lo.n4 == 100);

  const SubgroupSizes hi = subgroup_sizes(500, p, p, 300);
  CHECK(hi.n1 == 200);
  CHECK(hi.n2 == 0);
  CHECK(hi.n3 == 0);
  CHECK(hi.n4 == 300);
}

TEST_CASE("fractional rates round up and keep the total") {
  const SubgroupSizes s = subgroup_sizes(501, 0.4003, 0.4003);
  CHECK(s.total() == 501);
  CHECK(s.n1 >= 0);
  CHECK(s.n2 >= 0);
  CHECK(s.n3 >= 0);
  CHECK(s.n4 >= 0);
}

TEST_CASE("infeasible subgroup configurations are rejected") {
  CHECK_THROWS_AS(subgroup_sizes(500, 0.4, 0.4, 50), DomainError);
  CHECK_THROWS_AS(subgroup_sizes(500, 0.4, 0.4, 400), DomainError);
  CHECK_THROWS_AS(subgroup_sizes(0, 0.4, 0.4), DomainError);
  CHECK_THROWS_AS(subgroup_sizes(500, 0.0, 0.4), DomainError);
  CHECK_THROWS_AS(subgroup_sizes(500, 0.4, 1.0), DomainError);
}

namespace {

TrialDesign make_design(int T, int K) {
  TrialDesign d;
  d.T = T;
  d.K = K;
  for (int j = 1; j <= T; ++j) d.times.push_back(j);
  d.rule = ResponseRule::at_most(0);
  return d;
}

}  // namespace

TEST_CASE("slot enumeration: counts and canonical order") {
  const TrialDesign d3 = make_design(3, 2);
  CHECK(enumerate_slots(1, d3).size() == 5);
  CHECK(enumerate_slots(2, d3).size() == 6);
  CHECK(enumerate_slots(3, d3).size() == 6);
  CHECK(enumerate_slots(4, d3).size() == 7);
  CHECK(enumerate_all_slots(d3).size() == 9);

  const TrialDesign d6 = make_design(6, 2);
  CHECK(enumerate_slots(1, d6).size() == 11);
  CHECK(enumerate_slots(4, d6).size() == 19);
  CHECK(enumerate_all_slots(d6).size() == 27);

  const auto slots = enumerate_slots(2, d3);  // responds to +1 only
  CHECK(slots[0].ets == EtsId::baseline());
  CHECK(slots[0].j == 1);
  CHECK(slots[1].ets == EtsId::first(+1));
  CHECK(slots[2].ets == EtsId::first(-1));
  CHECK(slots[3].ets == EtsId::second(+1, 1, 0));
  CHECK(slots[4].ets == EtsId::second(-1, 0, +1));
  CHECK(slots[5].ets == EtsId::second(-1, 0, -1));
  for (size_t i = 3; i < slots.size(); ++i) CHECK(slots[i].j == 3);
}

TEST_CASE("marginals truncate only at the last first-stage occasion") {
  const TrialDesign d = make_design(6, 2);
  EtsGrid grid = EtsGrid::empty(6, 2);
  grid.at(EtsId::baseline(), 1) = {2.5, 1.92};
  grid.at(EtsId::first(+1), 2) = {4.8, 2.98};
  grid.at(EtsId::first(-1), 2) = {4.8, 2.98};
  for (const auto& e : stage2_sequences())
    for (int j = 3; j <= 6; ++j) grid.at(e, j) = {2.6, 1.98};

  // subgroup 1 responds to +1: the K-occasion slot is the responder side,
  // a point mass at zero under the c = 0 rule
  const auto slots1 = enumerate_slots(1, d);
  const auto marg1 = assign_marginals(1, slots1, grid, d.rule);
  const int k_plus = 1;  // (+1)@2 by canonical order
  REQUIRE(slots1[k_plus].ets == EtsId::first(+1));
  CHECK(marg1[k_plus].quantile(0.0) == 0);
  CHECK(marg1[k_plus].quantile(0.999999) == 0);

  // subgroup 4 never responds: the same slot is the > 0 tail
  const auto slots4 = enumerate_slots(4, d);
  const auto marg4 = assign_marginals(4, slots4, grid, d.rule);
  REQUIRE(slots4[k_plus].ets == EtsId::first(+1));
  CHECK(marg4[k_plus].quantile(0.0) >= 1);

  // non-K occasions stay untruncated: quantiles match the plain NB
  const NbParams base{2.5, 1.92};
  for (double u : {0.05, 0.3, 0.7, 0.95})
    CHECK(marg1[0].quantile(u) == nb_quantile(u, base));

  // truncated tail mean: mu / (1 - pi0) with pi0 = 0.40 at these anchors
  Rng rng(99ULL);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += marg4[k_plus].quantile(rng.uniform());
  CHECK(sum / n == doctest::Approx(4.8 / 0.6).epsilon(0.02));
}

TEST_CASE("degenerate truncation regions are rejected") {
  CHECK_THROWS_AS(
      CdfTable::build({0.01, 1.0},
                      CountRegion::from_rule(ResponseRule::greater_than(200),
                                             true)),
      DegenerateRegionError);
}

TEST_CASE("generation layout matches the requested sizes") {
  const StudyConfig sc = preset("table3-scenario-1");
  const PowerConfig pc = make_power_config(sc);
  const SubgroupSizes sizes = subgroup_sizes(120, 0.4, 0.4);
  const GenContext ctx = prepare_generator(sizes, pc.design, pc.grid, pc.dep);
  const PotentialOutcomes pot =
      generate_potential_outcomes(ctx, RngStream{42});
  CHECK(pot.total() == 120);
  REQUIRE(pot.groups.size() == 4);
  for (int g = 0; g < 4; ++g) {
    CHECK(pot.groups[g].subgroup == g + 1);
    CHECK(pot.groups[g].counts.rows() == sizes.of(g + 1));
    CHECK(pot.groups[g].counts.cols() ==
          static_cast<int>(pot.groups[g].slots.size()));
    // subgroups 2 and 3 are empty here (n4 at its maximum); an empty
    // matrix has no minimum
    if (sizes.of(g + 1) > 0) CHECK(pot.groups[g].counts.minCoeff() >= 0);
  }
}

TEST_CASE("observed trials satisfy the design invariants") {
  const StudyConfig sc = preset("table3-scenario-3");
  const PowerConfig pc = make_power_config(sc);
  const double p = implied_responder_rate(pc, +1);
  const double q = implied_responder_rate(pc, -1);
  const SubgroupSizes sizes = subgroup_sizes(400, p, q);
  const GenContext ctx = prepare_generator(sizes, pc.design, pc.grid, pc.dep);
  const RngStream stream{derive_seed(7u, 400u, 0u)};
  const PotentialOutcomes pot = generate_potential_outcomes(ctx, stream);
  const ObservedTrial trial = randomize_and_observe(pot, pc.design, stream);

  REQUIRE(trial.T == 6);
  REQUIRE(trial.rows.size() == 400);
  std::set<int> ids;
  std::set<std::tuple<int, int, int>> patterns;
  int responders = 0;
  for (const auto& row : trial.rows) {
    ids.insert(row.id);
    REQUIRE(row.y.size() == 6);
    CHECK((row.a1 == +1 || row.a1 == -1));
    // response status must re-derive from the K-occasion outcome
    CHECK(row.r == (pc.design.rule.responder(row.y[1]) ? 1 : 0));
    if (row.r == 1) {
      CHECK(row.a2 == 0);
      CHECK(row.y[1] == 0);
      ++responders;
    } else {
      CHECK((row.a2 == +1 || row.a2 == -1));
      CHECK(row.y[1] >= 1);
    }
    // responder subgroups constrain what response can occur
    CHECK(row.r == (responds(row.subgroup, row.a1) ? 1 : 0));
    for (int v : row.y) CHECK(v >= 0);
    patterns.insert({row.a1, row.r, row.a2});
  }
  CHECK(ids.size() == 400);
  // six terminal cells and nothing else
  const std::set<std::tuple<int, int, int>> expected = {
      {+1, 1, 0}, {+1, 0, +1}, {+1, 0, -1},
      {-1, 1, 0}, {-1, 0, +1}, {-1, 0, -1}};
  CHECK(patterns == expected);
  // randomization (not subgroup sizing) drives the responder share
  CHECK(std::fabs(responders / 400.0 - 0.4) < 0.10);
}

TEST_CASE("generation is reproducible and seed-sensitive") {
  const StudyConfig sc = preset("table3-scenario-1");
  const PowerConfig pc = make_power_config(sc);
  const SubgroupSizes sizes = subgroup_sizes(60, 0.4, 0.4);
  const GenContext ctx = prepare_generator(sizes, pc.design, pc.grid, pc.dep);
  const ObservedTrial t1 =
      randomize_and_observe(generate_potential_outcomes(ctx, RngStream{5}),
                            pc.design, RngStream{5});
  const ObservedTrial t2 =
      randomize_and_observe(generate_potential_outcomes(ctx, RngStream{5}),
                            pc.design, RngStream{5});
  const ObservedTrial t3 =
      randomize_and_observe(generate_potential_outcomes(ctx, RngStream{6}),
                            pc.design, RngStream{6});
  REQUIRE(t1.rows.size() == t2.rows.size());
  bool same12 = true, same13 = true;
  for (size_t i = 0; i < t1.rows.size(); ++i) {
    same12 = same12 && t1.rows[i].a1 == t2.rows[i].a1 &&
             t1.rows[i].y == t2.rows[i].y && t1.rows[i].a2 == t2.rows[i].a2;
    same13 = same13 && t1.rows[i].a1 == t3.rows[i].a1 &&
             t1.rows[i].y == t3.rows[i].y && t1.rows[i].a2 == t3.rows[i].a2;
  }
  CHECK(same12);
  CHECK_FALSE(same13);
}

TEST_CASE("an individual's draws do not depend on other subgroup sizes") {
  const StudyConfig sc = preset("table3-scenario-1");
  const PowerConfig pc = make_power_config(sc);
  const GenContext a =
      prepare_generator(subgroup_sizes(500, 0.4, 0.4, 300), pc.design,
                        pc.grid, pc.dep);
  const GenContext b =
      prepare_generator(subgroup_sizes(500, 0.4, 0.4, 150), pc.design,
                        pc.grid, pc.dep);
  const PotentialOutcomes pa = generate_potential_outcomes(a, RngStream{11});
  const PotentialOutcomes pb = generate_potential_outcomes(b, RngStream{11});
  // shared rows of subgroup 4 (first 150) are bit-identical across layouts
  CHECK(pa.groups[3].counts.topRows(150) == pb.groups[3].counts.topRows(150));
  // subgroup 1 rows shared by both layouts agree as well
  const int shared1 = std::min(pa.groups[0].counts.rows(),
                               pb.groups[0].counts.rows());
  CHECK(pa.groups[0].counts.topRows(shared1) ==
        pb.groups[0].counts.topRows(shared1));
}

TEST_CASE("grid and design layouts must agree") {
  const StudyConfig sc = preset("table3-scenario-1");
  const PowerConfig pc = make_power_config(sc);
  const EtsGrid wrong = EtsGrid::empty(5, 2);
  CHECK_THROWS_AS(prepare_generator(subgroup_sizes(50, 0.4, 0.4), pc.design,
                                    wrong, pc.dep),
                  DomainError);
}
