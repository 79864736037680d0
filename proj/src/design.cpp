#include "smartpower/design.hpp"

#include <sstream>

#include "smartpower/errors.hpp"

namespace smartpower {

std::string EtsId::label() const {
  switch (stage) {
    case Stage::Baseline:
      return "(.)";
    case Stage::First:
      return a1 > 0 ? "(+1)" : "(-1)";
    case Stage::Second: {
      std::ostringstream out;
      out << '(' << (a1 > 0 ? "+1" : "-1") << ',' << int(r) << ','
          << (a2 > 0 ? "+1" : (a2 < 0 ? "-1" : "0")) << ')';
      return out.str();
    }
  }
  return "?";
}

const std::array<EtsId, 6>& stage2_sequences() {
  static const std::array<EtsId, 6> seqs = {
      EtsId::second(+1, 1, 0),  EtsId::second(+1, 0, +1),
      EtsId::second(+1, 0, -1), EtsId::second(-1, 1, 0),
      EtsId::second(-1, 0, +1), EtsId::second(-1, 0, -1),
  };
  return seqs;
}

int ets_code(const EtsId& e) {
  switch (e.stage) {
    case EtsId::Stage::Baseline:
      return 0;
    case EtsId::Stage::First:
      return e.a1 > 0 ? 1 : 2;
    case EtsId::Stage::Second: {
      const auto& seqs = stage2_sequences();
      for (int i = 0; i < 6; ++i)
        if (seqs[i] == e) return 3 + i;
      break;
    }
  }
  throw DomainError("ets_code: malformed treatment sequence");
}

EtsId ets_from_code(int code) {
  if (code == 0) return EtsId::baseline();
  if (code == 1) return EtsId::first(+1);
  if (code == 2) return EtsId::first(-1);
  if (code >= 3 && code < 9) return stage2_sequences()[code - 3];
  throw DomainError("ets_from_code: code out of range");
}

void TrialDesign::validate() const {
  if (T < 3) throw DomainError("TrialDesign: need T >= 3 occasions");
  if (K < 2 || K >= T)
    throw DomainError("TrialDesign: need 2 <= K < T");
  if (static_cast<int>(times.size()) != T)
    throw DomainError("TrialDesign: times must have length T");
  for (int j = 1; j < T; ++j)
    if (!(times[j] > times[j - 1]))
      throw DomainError("TrialDesign: times must be strictly increasing");
  if (!(p_a1 > 0.0 && p_a1 < 1.0) || !(p_a2 > 0.0 && p_a2 < 1.0))
    throw DomainError("TrialDesign: randomization probabilities must be in (0,1)");
  rule.validate();
}

EtsGrid EtsGrid::empty(int T, int K) {
  EtsGrid g;
  g.T = T;
  g.K = K;
  g.cells.resize(9);
  g.cells[0].resize(1);
  g.cells[1].resize(K - 1);
  g.cells[2].resize(K - 1);
  for (int c = 3; c < 9; ++c) g.cells[c].resize(T - K);
  return g;
}

namespace {

int cell_offset(const EtsId& e, int j, int T, int K) {
  switch (e.stage) {
    case EtsId::Stage::Baseline:
      if (j != 1) break;
      return 0;
    case EtsId::Stage::First:
      if (j < 2 || j > K) break;
      return j - 2;
    case EtsId::Stage::Second:
      if (j <= K || j > T) break;
      return j - K - 1;
  }
  std::ostringstream msg;
  msg << "grid cell " << e.label() << " at occasion " << j
      << " is outside the design layout";
  throw DomainError(msg.str());
}

}  // namespace

const NbParams& EtsGrid::at(const EtsId& e, int j) const {
  return cells[ets_code(e)][cell_offset(e, j, T, K)];
}

NbParams& EtsGrid::at(const EtsId& e, int j) {
  return cells[ets_code(e)][cell_offset(e, j, T, K)];
}

void EtsGrid::validate() const {
  if (cells.size() != 9) throw DomainError("EtsGrid: malformed cell storage");
  if (T < 3 || K < 2 || K >= T) throw DomainError("EtsGrid: bad T/K");
  const size_t want[9] = {1,
                          size_t(K - 1), size_t(K - 1),
                          size_t(T - K), size_t(T - K), size_t(T - K),
                          size_t(T - K), size_t(T - K), size_t(T - K)};
  for (int c = 0; c < 9; ++c) {
    if (cells[c].size() != want[c])
      throw DomainError("EtsGrid: wrong number of cells for a sequence");
    for (const auto& p : cells[c]) p.validate();
  }
}

bool responds(int subgroup, int a1) {
  switch (subgroup) {
    case 1:
      return true;
    case 2:
      return a1 > 0;
    case 3:
      return a1 < 0;
    case 4:
      return false;
  }
  throw DomainError("responds: subgroup must be 1..4");
}

std::vector<EtsId> feasible_stage2(int subgroup) {
  std::vector<EtsId> out;
  for (const auto& e : stage2_sequences()) {
    const bool resp = responds(subgroup, e.a1);
    if ((e.r == 1) == resp) out.push_back(e);
  }
  return out;
}

std::vector<OutcomeSlot> enumerate_slots(int subgroup,
                                         const TrialDesign& design) {
  design.validate();
  std::vector<OutcomeSlot> slots;
  slots.push_back({EtsId::baseline(), 1});
  for (int j = 2; j <= design.K; ++j) {
    slots.push_back({EtsId::first(+1), j});
    slots.push_back({EtsId::first(-1), j});
  }
  const auto stage2 = feasible_stage2(subgroup);
  for (int j = design.K + 1; j <= design.T; ++j)
    for (const auto& e : stage2) slots.push_back({e, j});
  return slots;
}

std::vector<OutcomeSlot> enumerate_all_slots(const TrialDesign& design) {
  design.validate();
  std::vector<OutcomeSlot> slots;
  slots.push_back({EtsId::baseline(), 1});
  for (int j = 2; j <= design.K; ++j) {
    slots.push_back({EtsId::first(+1), j});
    slots.push_back({EtsId::first(-1), j});
  }
  for (int j = design.K + 1; j <= design.T; ++j)
    for (const auto& e : stage2_sequences()) slots.push_back({e, j});
  return slots;
}

}  // namespace smartpower
