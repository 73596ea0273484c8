#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "kepal/formula.hpp"
#include "kepal/partition.hpp"
#include "kepal/worldset.hpp"

namespace kepal {

/// The per-state Kripke model: the full world space 2^at_size with one
/// accessibility relation per declared agent. agent_ids[i] is the identity
/// behind relation slot i (slots are sorted by id).
struct KripkeModel {
  std::uint32_t at_size = 0;
  std::vector<std::uint32_t> agent_ids;
  std::vector<RelPtr> rels;

  std::uint32_t n_worlds() const { return 1u << at_size; }
  /// Slot of an agent id; throws SpecError for undeclared agents.
  std::uint32_t slot_of(std::uint32_t agent_id) const;
};

/// Memoization hook for sat_set. Implementations key on the formula node
/// and on the relations the node actually reads.
class SatMemo {
public:
  virtual ~SatMemo() = default;
  virtual const WorldSet* lookup(EFormula f, const KripkeModel& m) = 0;
  /// Takes ownership of s and returns the stored copy.
  virtual const WorldSet* store(EFormula f, const KripkeModel& m, WorldSet s) = 0;
};

/// Self-contained SatMemo keyed on formula node and relation identity.
/// Works for any family of relations that are shared by pointer across
/// queries (as explored graphs and the engine context guarantee).
class SatCache final : public SatMemo {
public:
  const WorldSet* lookup(EFormula f, const KripkeModel& m) override;
  const WorldSet* store(EFormula f, const KripkeModel& m, WorldSet s) override;

private:
  struct Key {
    EFormula f;
    std::vector<const PartitionRelation*> rels;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  static Key make_key(EFormula f, const KripkeModel& m);

  std::mutex mu_;
  std::unordered_map<Key, std::unique_ptr<WorldSet>, KeyHash> cache_;
  std::vector<RelPtr> pins_;
};

/// The set of worlds satisfying an epistemic formula, computed bottom-up;
/// a knowledge block enters the result as a unit or not at all.
WorldSet sat_set(const KripkeModel& m, EFormula f, SatMemo* memo = nullptr);

/// Membership of X in sat_set(m, f).
bool holds_at(const KripkeModel& m, World x, EFormula f, SatMemo* memo = nullptr);

/// True iff X and Y disagree on f under m.
bool diff_oracle(const KripkeModel& m, World x, World y, EFormula f);

/// Explicit pair-set form of a relation, for checking arbitrary (possibly
/// non-equivalence) relations by enumeration. Intended for small world
/// spaces.
struct PairSet {
  std::uint32_t n_worlds = 0;
  std::vector<std::pair<World, World>> pairs;

  bool contains(World a, World b) const;
  void sort_unique();
  bool operator==(const PairSet& o) const = default;
};

enum class RelProp { Reflexive, Symmetric, Transitive };

bool relation_is(const PairSet& r, RelProp p);
bool relation_is(const PartitionRelation& r, RelProp p);

/// Bridge between the pair-set and partition representations. The pair set
/// must be an equivalence; the violated property is named otherwise.
PartitionRelation partition_from_pairs(const PairSet& r);
PairSet pairs_from_partition(const PartitionRelation& r);

/// Debug form of a relation: blocks as sorted proposition-set literals,
/// e.g. `{{},{q}} {{p},{p,q}}`.
std::string format_relation_blocks(const PartitionRelation& r,
                                   std::span<const std::string> prop_names);

/// Proposition-set literal of one world, e.g. `{p,q}`.
std::string format_world(World w, std::span<const std::string> prop_names);

}  // namespace kepal
