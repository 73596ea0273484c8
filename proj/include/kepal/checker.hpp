#pragma once

#include <string>
#include <vector>

#include "kepal/ktformula.hpp"
#include "kepal/pool.hpp"

namespace kepal {

/// Bitset over graph state ids.
using StateSet = WorldSet;

/// Global labeling of a graph by a formula, bottom-up. Diamonds are
/// pre-images, F is a least fixpoint (backward reachability), G a greatest
/// fixpoint (a state satisfies G f iff an infinite f-path leaves it, so
/// deadlocks never do). Epistemic subformulas evaluate per state in that
/// state's Kripke model at its valuation.
StateSet sat_states(const KltsGraph& g, const KtFormula& f, SatMemo* memo = nullptr);

/// Membership of s in sat_states(g, f); throws on unknown state ids.
bool check(const KltsGraph& g, std::uint32_t s, const KtFormula& f, SatMemo* memo = nullptr);

/// Diagnostic evidence for a verdict. Paths carry (state, label) steps; a
/// lasso's last step returns to states()[cycle_start].
struct Witness {
  enum class Kind : std::uint8_t { None, State, Path, Lasso, Refutation };

  Kind kind = Kind::None;
  std::uint32_t start = 0;
  std::vector<std::pair<std::uint32_t, Label>> steps;
  std::uint32_t final_state = 0;
  std::size_t cycle_start = 0;  // Lasso only: index into the state sequence
  std::string note;

  /// The visited state sequence including the final state.
  std::vector<std::uint32_t> state_seq() const;
};

/// A shortest path into the target set for true F/Diamond claims, a lasso
/// inside the satisfying set for true G claims, the failing clause for
/// false top-level claims.
Witness witness(const KltsGraph& g, std::uint32_t s, const KtFormula& f,
                SatMemo* memo = nullptr);

/// Re-derives the verdict by stepping the trace through the graph.
bool replay_witness(const KltsGraph& g, std::uint32_t s, const KtFormula& f,
                    const Witness& w, SatMemo* memo = nullptr);

std::string format_witness(const Witness& w);

}  // namespace kepal
