#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kepal/ast.hpp"
#include "kepal/kripke.hpp"

namespace kepal {

// ------------------------------------------------------------------ labels

/// Pool-level transition label: tau (assignments and communications) or an
/// agent-tagged internal action `j.b`.
struct Label {
  bool tau = true;
  std::uint32_t agent = 0;  // identity, not slot
  std::string name;

  static Label make_tau() { return Label{}; }
  static Label visible(std::uint32_t agent, std::string name) {
    return Label{false, agent, std::move(name)};
  }
  std::string str() const { return tau ? "tau" : std::to_string(agent) + "." + name; }
  bool operator==(const Label&) const = default;
  auto operator<=>(const Label&) const = default;
};

// ------------------------------------------------------------- agent steps

/// A fully evaluated first action: channel indices flattened into the name,
/// destinations and set targets evaluated, payloads grounded. Inputs keep
/// their binders; they are instantiated at synchronization.
struct GroundAction {
  ast::Action::Kind kind = ast::Action::Kind::Internal;
  std::string name;
  std::int64_t dest = 0;         // Output
  EFormula payload = nullptr;    // Output
  std::string bind_y, bind_f;    // Input (empty = wildcard)
  std::uint32_t prop = 0;        // Set
  bool value = false;            // Set
};

struct AgentStep {
  GroundAction action;
  ast::Term cont;
};

/// Enabled initial actions of a closed term: prefixes fire, sums offer all
/// branches, indexed sums expand, constant calls unfold with evaluated
/// arguments. Throws on evaluation errors; unguarded recursion is rejected
/// at load, so unfolding terminates.
std::vector<AgentStep> agent_steps(const ast::Term& t, const ast::SystemSpec& spec,
                                   FormulaInterner& formulas);

// -------------------------------------------------------------- pool states

struct PoolState {
  std::vector<ast::Term> terms;  // by agent slot (ids ascending)
  std::vector<RelPtr> rels;      // by agent slot
  World x = 0;
};

/// Shared state for one exploration/checking session: formula and relation
/// interning plus a satisfaction-set cache keyed on (formula node, the
/// relations the formula reads). Thread-safe; all returned pointers stay
/// valid for the context's lifetime.
class EngineContext : public SatMemo {
public:
  explicit EngineContext(const ast::SystemSpec& spec);

  const ast::SystemSpec& spec() const { return *spec_; }
  std::uint32_t at_size() const { return at_size_; }
  std::uint32_t n_worlds() const { return 1u << at_size_; }
  std::span<const std::uint32_t> agent_ids() const { return agent_ids_; }
  std::uint32_t slot_of(std::uint32_t agent_id) const;

  FormulaInterner& formulas() { return formulas_; }

  RelPtr intern(PartitionRelation r);
  std::uint32_t rel_id(const RelPtr& r) const;

  KripkeModel model_for(std::span<const RelPtr> rels) const;
  /// Cached satisfaction set under the given relation family.
  const WorldSet& sat(std::span<const RelPtr> rels, EFormula f);

  PoolState initial_state() const;

  // SatMemo
  const WorldSet* lookup(EFormula f, const KripkeModel& m) override;
  const WorldSet* store(EFormula f, const KripkeModel& m, WorldSet s) override;

private:
  struct SatKey {
    EFormula f;
    std::vector<std::uint32_t> rel_ids;
    bool operator==(const SatKey&) const = default;
  };
  struct SatKeyHash {
    std::size_t operator()(const SatKey& k) const;
  };

  const ast::SystemSpec* spec_;
  std::uint32_t at_size_;
  std::vector<std::uint32_t> agent_ids_;
  ast::Env global_env_;

  FormulaInterner formulas_;

  mutable std::mutex rel_mu_;
  std::unordered_map<std::uint64_t, std::vector<RelPtr>> rel_index_;
  std::unordered_map<const PartitionRelation*, std::uint32_t> rel_ids_;
  std::uint32_t next_rel_id_ = 0;

  mutable std::mutex sat_mu_;
  std::unordered_map<SatKey, std::unique_ptr<WorldSet>, SatKeyHash> sat_cache_;
};

// ---------------------------------------------------------------- stepping

/// All pool transitions from s, deterministically ordered by rule kind
/// (internal, set, com), then agent slot, then branch index. A com whose
/// knowledge premise fails contributes nothing; outputs to the sender
/// itself or to undeclared agents never synchronize.
std::vector<std::pair<Label, PoolState>> pool_steps(EngineContext& ctx, const PoolState& s);

/// The assignment update: X flips proposition p to w, the assigning agent's
/// relation splits on p, every other relation merges on p.
PoolState apply_set(EngineContext& ctx, const PoolState& s, std::uint32_t slot,
                    std::uint32_t prop, bool value, ast::Term cont);

/// The communication update: the receiver's relation splits on the
/// satisfaction set of the payload under the pre-state model. The caller
/// guarantees the premise; it is re-checked here.
PoolState apply_com(EngineContext& ctx, const PoolState& s, std::uint32_t sender_slot,
                    std::uint32_t receiver_slot, EFormula payload, ast::Term sender_cont,
                    ast::Term receiver_cont);

/// Injective serialization of a pool state: per agent (ids ascending) the
/// canonical term text and the relation's intern id, then the valuation.
std::string canonical_key(EngineContext& ctx, const PoolState& s);

// ------------------------------------------------------------------ graphs

struct KltsMeta {
  std::vector<std::string> prop_names;
  std::vector<std::uint32_t> agent_ids;
  std::uint32_t at_size() const { return static_cast<std::uint32_t>(prop_names.size()); }
};

struct KltsState {
  World x = 0;
  std::vector<RelPtr> rels;        // by agent slot
  std::vector<std::string> terms;  // printed agent terms (may be empty)
};

struct KltsTransition {
  std::uint32_t src;
  Label label;
  std::uint32_t dst;
};

struct KltsGraph {
  std::shared_ptr<const KltsMeta> meta;
  std::vector<KltsState> states;
  std::vector<KltsTransition> trans;
  std::uint32_t root = 0;
  bool truncated = false;
  std::string truncation_reason;

  std::uint32_t n_states() const { return static_cast<std::uint32_t>(states.size()); }
  KripkeModel model_of(std::uint32_t s) const;

  /// Out-edges of s; finalize() must have run (explore does).
  std::span<const KltsTransition> out(std::uint32_t s) const;
  /// Sorts transitions by source (stable) and builds the out-edge index.
  void finalize();

private:
  std::vector<std::uint32_t> first_edge_;
};

struct ExploreOptions {
  std::uint32_t max_states = 1'000'000;
  std::uint32_t max_depth = UINT32_MAX;
  bool parallel = true;
};

struct ExploreResult {
  KltsGraph graph;
  std::uint32_t depth = 0;
};

/// Breadth-first reachable sub-KLTS from the initial pool state, states
/// deduplicated by canonical key. Limits report truncation, not failure.
/// The result is independent of the parallel flag, byte for byte.
ExploreResult explore(const ast::SystemSpec& spec, const ExploreOptions& opts = {});

// -------------------------------------------------------------- projection

struct Lts {
  std::uint32_t n_states = 0;
  std::uint32_t root = 0;
  std::vector<KltsTransition> trans;
};

/// Drops relation families and valuations, keeping states, labels, root.
Lts project_lts(const KltsGraph& g);

// ------------------------------------------------------------------- dumps

enum class RelDumpMode { Auto, Full, Hash };

struct DumpOptions {
  RelDumpMode relations = RelDumpMode::Auto;
};

/// Stable text dump: a header line `<states> <transitions> <root>`, one
/// STATE line per state, one TRANS line per transition.
std::string dump_graph(const KltsGraph& g, const DumpOptions& opts = {});

}  // namespace kepal
