#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "smartpower/copula.hpp"
#include "smartpower/design.hpp"
#include "smartpower/rng.hpp"

namespace smartpower {

/** Latent responder subgroup sizes. Subgroup 1 responds to both first-stage
 *  arms, 2 only to +1, 3 only to -1, 4 to neither. */
struct SubgroupSizes {
  int n1 = 0, n2 = 0, n3 = 0, n4 = 0;

  int total() const { return n1 + n2 + n3 + n4; }
  int of(int g) const;
};

/** Sizes consistent with responder rates p (arm +1) and q (arm -1).
 *  n4 defaults to its maximum min{N(1-p), N(1-q)}; an override must stay
 *  within the feasible interval or the implied n1 goes negative. */
SubgroupSizes subgroup_sizes(int N, double p, double q,
                             std::optional<int> n4_override = {});

/** Marginal CDF lookup per slot: truncated at the last first-stage occasion
 *  (responder side when the subgroup responds to that arm, complement
 *  otherwise), plain negative binomial everywhere else. */
std::vector<CdfTable> assign_marginals(int subgroup,
                                       const std::vector<OutcomeSlot>& slots,
                                       const EtsGrid& grid,
                                       const ResponseRule& rule);

struct SubgroupBlock {
  int subgroup = 0;
  std::vector<OutcomeSlot> slots;
  Eigen::MatrixXi counts;  // rows: individuals, cols: slots
};

struct PotentialOutcomes {
  std::vector<SubgroupBlock> groups;
  int total() const;
};

/** Everything that is fixed across Monte Carlo replicates: slot layouts,
 *  Cholesky factors, and marginal tables per subgroup. */
struct GenContext {
  TrialDesign design;
  SubgroupSizes sizes;
  struct Group {
    int subgroup = 0;
    int n = 0;
    std::vector<OutcomeSlot> slots;
    Eigen::MatrixXd chol;
    std::vector<CdfTable> marginals;
  };
  std::vector<Group> groups;
};

GenContext prepare_generator(const SubgroupSizes& sizes,
                             const TrialDesign& design, const EtsGrid& grid,
                             const DependenceSpec& dep);

/** Draws one dataset of potential outcomes. Each individual consumes an
 *  independent substream keyed by (subgroup, row), so results do not depend
 *  on other subgroups' sizes or on scheduling. */
PotentialOutcomes generate_potential_outcomes(const GenContext& ctx,
                                              const RngStream& stream);

PotentialOutcomes generate_potential_outcomes(const SubgroupSizes& sizes,
                                              const TrialDesign& design,
                                              const EtsGrid& grid,
                                              const DependenceSpec& dep,
                                              const RngStream& stream);

/** One individual's observed trajectory after sequential randomization. */
struct ObservedTrial {
  int T = 0;
  struct Row {
    int id = 0;
    int subgroup = 0;
    int a1 = 0;
    int r = 0;
    int a2 = 0;  // 0 for responders
    std::vector<int> y;
  };
  std::vector<Row> rows;
};

/** Assigns A1, reads off response from the stored counts, assigns A2 to
 *  non-responders, and selects the consistent potential trajectory. */
ObservedTrial randomize_and_observe(const PotentialOutcomes& pot,
                                    const TrialDesign& design,
                                    const RngStream& stream);

}  // namespace smartpower
