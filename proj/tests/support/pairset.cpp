#include "support/pairset.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace kepal::oracle {

PairRel PairRel::identity(std::uint32_t n) {
  PairRel r(n);
  for (World w = 0; w < n; ++w) r.set(w, w);
  return r;
}

PairRel PairRel::full(std::uint32_t n) {
  PairRel r(n);
  for (World a = 0; a < n; ++a)
    for (World b = 0; b < n; ++b) r.set(a, b);
  return r;
}

PairRel PairRel::from_partition(const PartitionRelation& p) {
  PairRel r(p.n_worlds());
  for (World a = 0; a < p.n_worlds(); ++a)
    for (World b = 0; b < p.n_worlds(); ++b)
      if (p.same_block(a, b)) r.set(a, b);
  return r;
}

bool PairRel::reflexive() const {
  for (World w = 0; w < n_; ++w)
    if (!get(w, w)) return false;
  return true;
}

bool PairRel::symmetric() const {
  for (World a = 0; a < n_; ++a)
    for (World b = 0; b < n_; ++b)
      if (get(a, b) != get(b, a)) return false;
  return true;
}

bool PairRel::transitive() const {
  for (World a = 0; a < n_; ++a)
    for (World b = 0; b < n_; ++b) {
      if (!get(a, b)) continue;
      for (World c = 0; c < n_; ++c)
        if (get(b, c) && !get(a, c)) return false;
    }
  return true;
}

PairRel PairRel::closure_full() const {
  // The reflexive-symmetric-transitive closure relates exactly the worlds
  // connected in the undirected pair graph; flood each component, then
  // complete it.
  PairRel r(n_);
  std::vector<std::uint32_t> comp(n_, UINT32_MAX);
  std::uint32_t n_comp = 0;
  std::vector<World> stack;
  for (World w = 0; w < n_; ++w) {
    if (comp[w] != UINT32_MAX) continue;
    comp[w] = n_comp;
    stack.push_back(w);
    while (!stack.empty()) {
      World cur = stack.back();
      stack.pop_back();
      for (World v = 0; v < n_; ++v) {
        if (comp[v] != UINT32_MAX) continue;
        if (get(cur, v) || get(v, cur)) {
          comp[v] = n_comp;
          stack.push_back(v);
        }
      }
    }
    ++n_comp;
  }
  std::vector<std::vector<World>> members(n_comp);
  for (World w = 0; w < n_; ++w) members[comp[w]].push_back(w);
  for (const auto& ws : members)
    for (World a : ws)
      for (World b : ws) r.set(a, b);
  return r;
}

PairRel PairRel::closure_single_step() const {
  PairRel r = *this;
  for (World a = 0; a < n_; ++a)
    for (World b = 0; b < n_; ++b) {
      if (!get(a, b)) continue;
      for (World c = 0; c < n_; ++c)
        if (get(b, c)) r.set(a, c);
    }
  return r;
}

bool PairRel::equals_partition(const PartitionRelation& p) const {
  if (p.n_worlds() != n_) return false;
  for (World a = 0; a < n_; ++a)
    for (World b = 0; b < n_; ++b)
      if (get(a, b) != p.same_block(a, b)) return false;
  return true;
}

bool eval_pairs(const std::vector<PairRel>& rels, std::span<const std::uint32_t> agent_ids,
                World x, EFormula f) {
  switch (f->kind) {
    case FormulaNode::Kind::True:
      return true;
    case FormulaNode::Kind::Prop:
      return (x >> f->prop) & 1;
    case FormulaNode::Kind::Not:
      return !eval_pairs(rels, agent_ids, x, f->a);
    case FormulaNode::Kind::And:
      return eval_pairs(rels, agent_ids, x, f->a) && eval_pairs(rels, agent_ids, x, f->b);
    case FormulaNode::Kind::Know: {
      auto it = std::lower_bound(agent_ids.begin(), agent_ids.end(), f->agent);
      if (it == agent_ids.end() || *it != f->agent)
        throw SpecError("unknown agent in oracle evaluation");
      const PairRel& rel = rels[it - agent_ids.begin()];
      for (World y = 0; y < rel.n_worlds(); ++y)
        if (rel.get(x, y) && !eval_pairs(rels, agent_ids, y, f->a)) return false;
      return true;
    }
  }
  return false;
}

namespace {

/// Truth of f at every world, evaluated directly; used to delete the
/// disagreeing pairs in one pass.
std::vector<bool> sat_vector(const std::vector<PairRel>& rels,
                             std::span<const std::uint32_t> ids, std::uint32_t n_worlds,
                             EFormula f) {
  std::vector<bool> out(n_worlds);
  for (World w = 0; w < n_worlds; ++w) out[w] = eval_pairs(rels, ids, w, f);
  return out;
}

std::string state_key(const OracleGraph::State& s) {
  std::string k;
  for (const auto& t : s.terms) {
    k += ast::print_term(t);
    k += '\x1e';
  }
  for (const auto& r : s.rels) {
    k += r.bytes();
    k += '\x1f';
  }
  k.append(reinterpret_cast<const char*>(&s.x), sizeof s.x);
  return k;
}

}  // namespace

OracleGraph explore_pairs(const ast::SystemSpec& spec, std::uint32_t max_states,
                          std::uint32_t max_depth) {
  FormulaInterner formulas;
  const std::uint32_t n_worlds = 1u << spec.props.size();
  std::vector<std::uint32_t> ids = spec.agent_ids();

  OracleGraph g;
  OracleGraph::State root;
  root.x = static_cast<World>(spec.init_mask);
  for (const auto& a : spec.agents) {
    root.terms.push_back(a.init);
    switch (a.obs.kind) {
      case ast::ObservesClause::Kind::All:
        root.rels.push_back(PairRel::identity(n_worlds));
        break;
      case ast::ObservesClause::Kind::None:
        root.rels.push_back(PairRel::full(n_worlds));
        break;
      case ast::ObservesClause::Kind::Props: {
        std::uint32_t mask = 0;
        for (std::uint32_t k : a.obs.props) mask |= 1u << k;
        PairRel r(n_worlds);
        for (World w = 0; w < n_worlds; ++w)
          for (World v = 0; v < n_worlds; ++v)
            if ((w & mask) == (v & mask)) r.set(w, v);
        root.rels.push_back(std::move(r));
        break;
      }
    }
  }

  std::unordered_map<std::string, std::uint32_t> seen;
  seen.emplace(state_key(root), 0);
  g.states.push_back(std::move(root));

  std::uint32_t layer_begin = 0, layer_end = 1, depth = 0;
  while (layer_begin < layer_end) {
    if (depth >= max_depth) {
      g.truncated = true;
      break;
    }
    for (std::uint32_t si = layer_begin; si < layer_end; ++si) {
      // Successor kinds in engine order: internal, set, com.
      std::vector<std::pair<std::string, OracleGraph::State>> succs;
      const OracleGraph::State s = g.states[si];  // copy: the vector grows
      std::vector<std::vector<AgentStep>> steps(s.terms.size());
      for (std::size_t i = 0; i < s.terms.size(); ++i)
        steps[i] = agent_steps(s.terms[i], spec, formulas);

      for (std::size_t i = 0; i < steps.size(); ++i)
        for (const auto& st : steps[i]) {
          if (st.action.kind != ast::Action::Kind::Internal) continue;
          OracleGraph::State t = s;
          t.terms[i] = st.cont;
          succs.emplace_back(std::to_string(ids[i]) + "." + st.action.name, std::move(t));
        }

      for (std::size_t i = 0; i < steps.size(); ++i)
        for (const auto& st : steps[i]) {
          if (st.action.kind != ast::Action::Kind::Set) continue;
          OracleGraph::State t = s;
          t.terms[i] = st.cont;
          const std::uint32_t bit = 1u << st.action.prop;
          t.x = st.action.value ? (s.x | bit) : (s.x & ~bit);
          for (std::size_t k = 0; k < t.rels.size(); ++k) {
            if (k == i) {
              // delete the pairs distinguished by the assigned proposition
              for (World a = 0; a < n_worlds; ++a)
                for (World b = 0; b < n_worlds; ++b)
                  if ((a & bit) != (b & bit)) t.rels[k].set(a, b, false);
            } else {
              PairRel add = s.rels[k];
              for (World w = 0; w < n_worlds; ++w)
                if (!(w & bit)) {
                  add.set(w | bit, w);
                  add.set(w, w | bit);
                }
              t.rels[k] = add.closure_full();
            }
          }
          succs.emplace_back("tau", std::move(t));
        }

      for (std::size_t i = 0; i < steps.size(); ++i) {
        for (const auto& st : steps[i]) {
          if (st.action.kind != ast::Action::Kind::Output) continue;
          if (st.action.dest < 0 ||
              st.action.dest == static_cast<std::int64_t>(ids[i]))
            continue;
          auto it = std::lower_bound(ids.begin(), ids.end(),
                                     static_cast<std::uint32_t>(st.action.dest));
          if (it == ids.end() || *it != static_cast<std::uint32_t>(st.action.dest))
            continue;
          std::size_t j = static_cast<std::size_t>(it - ids.begin());
          for (const auto& rt : steps[j]) {
            if (rt.action.kind != ast::Action::Kind::Input) continue;
            if (rt.action.name != st.action.name) continue;
            EFormula know = formulas.know(ids[i], st.action.payload);
            if (!eval_pairs(s.rels, ids, s.x, know)) break;
            OracleGraph::State t = s;
            t.terms[i] = st.cont;
            ast::Bindings binds;
            if (!rt.action.bind_y.empty())
              binds[rt.action.bind_y] = static_cast<std::int64_t>(ids[i]);
            if (!rt.action.bind_f.empty())
              binds[rt.action.bind_f] =
                  ast::formula_from_ground(st.action.payload, spec.props);
            t.terms[j] = substitute(rt.cont, binds);
            std::vector<bool> sat = sat_vector(s.rels, ids, n_worlds, st.action.payload);
            for (World a = 0; a < n_worlds; ++a)
              for (World b = 0; b < n_worlds; ++b)
                if (t.rels[j].get(a, b) && sat[a] != sat[b]) t.rels[j].set(a, b, false);
            succs.emplace_back("tau", std::move(t));
          }
        }
      }

      for (auto& [label, t] : succs) {
        std::string key = state_key(t);
        auto found = seen.find(key);
        std::uint32_t dst;
        if (found != seen.end()) {
          dst = found->second;
        } else {
          if (g.states.size() >= max_states) {
            g.truncated = true;
            continue;
          }
          dst = static_cast<std::uint32_t>(g.states.size());
          seen.emplace(std::move(key), dst);
          g.states.push_back(std::move(t));
        }
        g.trans.emplace_back(si, label, dst);
      }
    }
    layer_begin = layer_end;
    layer_end = static_cast<std::uint32_t>(g.states.size());
    ++depth;
  }
  return g;
}

std::string compare_with_pairs(const ast::SystemSpec& spec, std::uint32_t max_states,
                               std::uint32_t max_depth) {
  ExploreOptions opts;
  opts.max_states = max_states;
  opts.max_depth = max_depth;
  ExploreResult engine = explore(spec, opts);
  OracleGraph oracle = explore_pairs(spec, max_states, max_depth);

  if (engine.graph.n_states() != oracle.states.size())
    return "state counts differ: engine " + std::to_string(engine.graph.n_states()) +
           ", pair oracle " + std::to_string(oracle.states.size());
  if (engine.graph.trans.size() != oracle.trans.size())
    return "transition counts differ";
  for (std::size_t i = 0; i < engine.graph.trans.size(); ++i) {
    const auto& et = engine.graph.trans[i];
    const auto& [src, label, dst] = oracle.trans[i];
    if (et.src != src || et.dst != dst || et.label.str() != label)
      return "transition " + std::to_string(i) + " differs: engine " +
             std::to_string(et.src) + " -" + et.label.str() + "-> " +
             std::to_string(et.dst) + ", pair oracle " + std::to_string(src) + " -" +
             label + "-> " + std::to_string(dst);
  }
  for (std::uint32_t s = 0; s < engine.graph.n_states(); ++s) {
    if (engine.graph.states[s].x != oracle.states[s].x)
      return "valuation differs at state " + std::to_string(s);
    for (std::size_t a = 0; a < engine.graph.states[s].rels.size(); ++a) {
      const PartitionRelation& er = *engine.graph.states[s].rels[a];
      const PairRel& pr = oracle.states[s].rels[a];
      if (!pr.reflexive() || !pr.symmetric() || !pr.transitive())
        return "pair relation not an equivalence at state " + std::to_string(s) +
               " agent slot " + std::to_string(a);
      if (!pr.equals_partition(er))
        return "relations differ at state " + std::to_string(s) + " agent slot " +
               std::to_string(a);
      PairSet bridge = pairs_from_partition(er);
      if (!relation_is(bridge, RelProp::Reflexive) ||
          !relation_is(bridge, RelProp::Symmetric) ||
          !relation_is(bridge, RelProp::Transitive))
        return "partition bridge fails an equivalence property at state " +
               std::to_string(s);
    }
  }
  return "";
}

}  // namespace kepal::oracle
