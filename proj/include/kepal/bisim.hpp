#pragma once

#include <string>
#include <vector>

#include "kepal/checker.hpp"
#include "kepal/pool.hpp"

namespace kepal {

/// Pointwise equivalence of two pointed per-state Kripke models: the
/// valuations must coincide, and on the set of worlds reachable from the
/// valuation under the union of all relations of either family, every
/// agent's relation must coincide between the families. Throws on
/// mismatched proposition universes or agent sets.
bool kripke_point_equiv(const KripkeModel& a, World va, const KripkeModel& b, World vb);

struct BisimVerdict {
  bool equal = false;
  int rounds = 0;
  std::string diagnostic;               // violated condition when !equal
  std::vector<std::uint32_t> blocks;    // final partition over states
  std::uint32_t n_blocks = 0;
};

/// Partition refinement: initial blocks group states with equal valuation
/// and pointwise-equivalent Kripke models, then blocks split by
/// (label, successor block) signatures until stable.
BisimVerdict bisimilar(const KltsGraph& g, std::uint32_t s, std::uint32_t t);

/// Disjoint union for cross-system comparison. Returns the combined graph
/// and the id offset of b's states. Requires equal proposition universes
/// and agent sets.
std::pair<KltsGraph, std::uint32_t> disjoint_union(const KltsGraph& a, const KltsGraph& b);

struct ModalEquivOptions {
  int depth = 4;                 // diamond nesting
  int epi_depth = 2;             // knowledge nesting in the epistemic basis
  std::size_t pool_cap = 600;    // semantically distinct formulas kept per layer
};

struct ModalEquivResult {
  bool equal = false;
  std::string distinguishing;    // a formula separating s and t, when found
  std::size_t formulas = 0;      // semantically distinct formulas examined
};

/// Enumerates the formulas of the bounded connective basis (propositions,
/// negation, binary conjunction, diamonds over labels occurring in the
/// graph plus the wildcard, knowledge operators to the given nesting) up
/// to the given diamond depth, deduplicated by satisfaction vector, and
/// reports whether s and t agree on all of them. A test oracle for the
/// logic-equivalence correspondence, not a decision procedure.
ModalEquivResult modal_equiv(const KltsGraph& g, std::uint32_t s, std::uint32_t t,
                             const ModalEquivOptions& opts, FormulaInterner& formulas);

}  // namespace kepal
