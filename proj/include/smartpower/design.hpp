#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "smartpower/distributions.hpp"

namespace smartpower {

/** Embedded treatment sequence: what an individual has received by a given
 *  occasion. Baseline "(.)"; first stage "(a1)"; second stage "(a1,r,a2)"
 *  with a2 == 0 exactly when r == 1 (responders are not re-randomized). */
struct EtsId {
  enum class Stage : std::uint8_t { Baseline, First, Second };
  Stage stage = Stage::Baseline;
  std::int8_t a1 = 0;
  std::int8_t r = 0;
  std::int8_t a2 = 0;

  static EtsId baseline() { return {}; }
  static EtsId first(int a1) {
    return {Stage::First, static_cast<std::int8_t>(a1), 0, 0};
  }
  static EtsId second(int a1, int r, int a2) {
    return {Stage::Second, static_cast<std::int8_t>(a1),
            static_cast<std::int8_t>(r), static_cast<std::int8_t>(a2)};
  }

  bool operator==(const EtsId& o) const {
    return stage == o.stage && a1 == o.a1 && r == o.r && a2 == o.a2;
  }
  bool operator!=(const EtsId& o) const { return !(*this == o); }

  std::string label() const;
};

/** Canonical second-stage sequences in path order A..F. */
const std::array<EtsId, 6>& stage2_sequences();

/** Dense storage code: 0 baseline, 1..2 first stage (+1 then -1),
 *  3..8 second stage in path order. */
int ets_code(const EtsId& e);
EtsId ets_from_code(int code);

/** One potential-outcome coordinate: a sequence observed at an occasion. */
struct OutcomeSlot {
  EtsId ets;
  int j = 1;  // occasion index, 1-based

  bool operator==(const OutcomeSlot& o) const {
    return ets == o.ets && j == o.j;
  }
};

/** Two-stage restricted trial layout. */
struct TrialDesign {
  int T = 0;  // measurement occasions
  int K = 0;  // last occasion before re-randomization
  std::vector<double> times;  // length T, strictly increasing
  ResponseRule rule;
  double p_a1 = 0.5;  // P(A1 = +1)
  double p_a2 = 0.5;  // P(A2 = +1 | non-responder)

  void validate() const;
};

/** Mean/dispersion surface over every sequence-by-occasion cell:
 *  (.) at j = 1; (+1),(-1) at j = 2..K; six (a1,r,a2) at j = K+1..T. */
struct EtsGrid {
  int T = 0;
  int K = 0;
  std::vector<std::vector<NbParams>> cells;  // indexed [ets_code]

  static EtsGrid empty(int T, int K);
  const NbParams& at(const EtsId& e, int j) const;
  NbParams& at(const EtsId& e, int j);
  void validate() const;
};

/** Whether a latent responder subgroup (1..4) responds to first-stage arm a1.
 *  1: responds to both arms; 2: only +1; 3: only -1; 4: neither. */
bool responds(int subgroup, int a1);

/** Second-stage sequences consistent with a subgroup's response behaviour. */
std::vector<EtsId> feasible_stage2(int subgroup);

/** Potential-outcome coordinates for one subgroup, in canonical order:
 *  occasion-major, and within an occasion the path order A..F. */
std::vector<OutcomeSlot> enumerate_slots(int subgroup,
                                         const TrialDesign& design);

/** All distinct coordinates across subgroups, same canonical order. */
std::vector<OutcomeSlot> enumerate_all_slots(const TrialDesign& design);

}  // namespace smartpower
