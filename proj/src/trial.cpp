#include "smartpower/trial.hpp"

#include <cmath>
#include <sstream>

#include "smartpower/errors.hpp"

namespace smartpower {

namespace {

// Substream tags for per-individual draws within one replicate.
constexpr std::uint64_t kTagCounts = 0x10;   // + subgroup
constexpr std::uint64_t kTagObserve = 0x20;  // + subgroup

}  // namespace

int SubgroupSizes::of(int g) const {
  switch (g) {
    case 1: return n1;
    case 2: return n2;
    case 3: return n3;
    case 4: return n4;
  }
  throw DomainError("SubgroupSizes: subgroup must be 1..4");
}

SubgroupSizes subgroup_sizes(int N, double p, double q,
                             std::optional<int> n4_override) {
  if (N <= 0) throw DomainError("subgroup_sizes: N must be positive");
  if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0))
    throw DomainError("subgroup_sizes: responder rates must lie in (0, 1)");
  // p and q often come out of the dispersion root search, so p*N can sit a
  // few parts in 1e9 off an integer; the snap tolerance must scale with N or
  // boundary overrides (n4 at its exact min or max) go infeasible.
  const double eps = 1e-8 * N + 1e-9;
  const double n4_max = std::min(N * (1.0 - p), N * (1.0 - q));
  double n4 = n4_max;
  if (n4_override) {
    n4 = *n4_override;
    if (n4 < 0.0 || n4 > n4_max + eps) {
      std::ostringstream msg;
      msg << "n4 override " << *n4_override << " outside feasible range [0, "
          << n4_max << "]";
      throw DomainError(msg.str());
    }
  }
  const double n1 = p * N + q * N + n4 - N;
  const double n2 = p * N - n1;
  const double n3 = q * N - n1;
  SubgroupSizes sizes;
  sizes.n2 = static_cast<int>(std::ceil(n2 - eps));
  sizes.n3 = static_cast<int>(std::ceil(n3 - eps));
  sizes.n4 = static_cast<int>(std::ceil(n4 - eps));
  sizes.n1 = N - sizes.n2 - sizes.n3 - sizes.n4;
  if (sizes.n1 < 0 || sizes.n2 < 0 || sizes.n3 < 0 || sizes.n4 < 0) {
    std::ostringstream msg;
    msg << "infeasible subgroup sizes at N=" << N << ", p=" << p << ", q=" << q;
    if (n4_override) msg << ", n4=" << *n4_override;
    msg << ": implied (" << sizes.n1 << ", " << sizes.n2 << ", " << sizes.n3
        << ", " << sizes.n4 << ")";
    throw DomainError(msg.str());
  }
  return sizes;
}

std::vector<CdfTable> assign_marginals(int subgroup,
                                       const std::vector<OutcomeSlot>& slots,
                                       const EtsGrid& grid,
                                       const ResponseRule& rule) {
  std::vector<CdfTable> tables;
  tables.reserve(slots.size());
  for (const auto& slot : slots) {
    const NbParams& p = grid.at(slot.ets, slot.j);
    if (slot.ets.stage == EtsId::Stage::First && slot.j == grid.K) {
      const bool resp = responds(subgroup, slot.ets.a1);
      tables.push_back(
          CdfTable::build(p, CountRegion::from_rule(rule, resp)));
    } else {
      tables.push_back(CdfTable::build(p));
    }
  }
  return tables;
}

int PotentialOutcomes::total() const {
  int n = 0;
  for (const auto& g : groups) n += static_cast<int>(g.counts.rows());
  return n;
}

GenContext prepare_generator(const SubgroupSizes& sizes,
                             const TrialDesign& design, const EtsGrid& grid,
                             const DependenceSpec& dep) {
  design.validate();
  grid.validate();
  dep.validate();
  if (grid.T != design.T || grid.K != design.K)
    throw DomainError("prepare_generator: grid layout does not match design");
  GenContext ctx;
  ctx.design = design;
  ctx.sizes = sizes;
  for (int g = 1; g <= 4; ++g) {
    GenContext::Group group;
    group.subgroup = g;
    group.n = sizes.of(g);
    group.slots = enumerate_slots(g, design);
    group.marginals = assign_marginals(g, group.slots, grid, design.rule);
    group.chol = cholesky_factor(
        build_latent_correlation(group.slots, design.times, dep));
    ctx.groups.push_back(std::move(group));
  }
  return ctx;
}

PotentialOutcomes generate_potential_outcomes(const GenContext& ctx,
                                              const RngStream& stream) {
  PotentialOutcomes pot;
  for (const auto& group : ctx.groups) {
    SubgroupBlock block;
    block.subgroup = group.subgroup;
    block.slots = group.slots;
    const int d = static_cast<int>(group.slots.size());
    block.counts.resize(group.n, d);
    std::vector<int> row(d);
    for (int i = 0; i < group.n; ++i) {
      Rng rng = stream.rng_at(kTagCounts + group.subgroup, i);
      sample_copula_row(group.chol, group.marginals, rng, row.data());
      for (int k = 0; k < d; ++k) block.counts(i, k) = row[k];
    }
    pot.groups.push_back(std::move(block));
  }
  return pot;
}

PotentialOutcomes generate_potential_outcomes(const SubgroupSizes& sizes,
                                              const TrialDesign& design,
                                              const EtsGrid& grid,
                                              const DependenceSpec& dep,
                                              const RngStream& stream) {
  return generate_potential_outcomes(
      prepare_generator(sizes, design, grid, dep), stream);
}

namespace {

int find_slot(const std::vector<OutcomeSlot>& slots, const EtsId& e, int j) {
  for (size_t k = 0; k < slots.size(); ++k)
    if (slots[k].j == j && slots[k].ets == e) return static_cast<int>(k);
  throw DomainError("observed sequence not present among potential outcomes");
}

}  // namespace

ObservedTrial randomize_and_observe(const PotentialOutcomes& pot,
                                    const TrialDesign& design,
                                    const RngStream& stream) {
  design.validate();
  ObservedTrial trial;
  trial.T = design.T;
  int id = 0;
  for (const auto& block : pot.groups) {
    for (int i = 0; i < block.counts.rows(); ++i, ++id) {
      Rng rng = stream.rng_at(kTagObserve + block.subgroup, i);
      ObservedTrial::Row row;
      row.id = id;
      row.subgroup = block.subgroup;
      row.a1 = rng.uniform() < design.p_a1 ? +1 : -1;
      row.r = responds(block.subgroup, row.a1) ? 1 : 0;
      row.a2 = 0;
      if (row.r == 0) row.a2 = rng.uniform() < design.p_a2 ? +1 : -1;
      row.y.resize(design.T);
      row.y[0] = block.counts(i, find_slot(block.slots, EtsId::baseline(), 1));
      for (int j = 2; j <= design.K; ++j)
        row.y[j - 1] =
            block.counts(i, find_slot(block.slots, EtsId::first(row.a1), j));
      const EtsId stage2 = EtsId::second(row.a1, row.r, row.a2);
      for (int j = design.K + 1; j <= design.T; ++j)
        row.y[j - 1] = block.counts(i, find_slot(block.slots, stage2, j));
      trial.rows.push_back(std::move(row));
    }
  }
  return trial;
}

}  // namespace smartpower
