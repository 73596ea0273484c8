#include "kepal/pool.hpp"

#include <algorithm>
#include <cassert>
#include <exception>
#include <stdexcept>

#include "kepal/kern.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kepal {

using ast::SystemSpec;

// ------------------------------------------------------------- agent steps

namespace {

constexpr int kMaxUnfoldDepth = 10'000;

std::string flatten_name(const std::string& name, const std::vector<ast::Expr>& indices,
                         const ast::Env& env) {
  std::string out = name;
  for (const auto& e : indices)
    out += "[" + std::to_string(ast::eval_expr(e, env)) + "]";
  return out;
}

GroundAction ground_action(const ast::Action& a, const SystemSpec& spec,
                           const ast::Env& env, std::span<const std::uint32_t> agent_ids,
                           FormulaInterner& formulas) {
  GroundAction g;
  g.kind = a.kind;
  g.name = flatten_name(a.name, a.indices, env);
  switch (a.kind) {
    case ast::Action::Kind::Internal:
      break;
    case ast::Action::Kind::Input:
      g.bind_y = a.bind_y;
      g.bind_f = a.bind_f;
      break;
    case ast::Action::Kind::Output:
      g.dest = ast::eval_expr(a.dest, env);
      g.payload = ast::ground_formula(a.payload, env, spec.props, agent_ids, formulas);
      break;
    case ast::Action::Kind::Set: {
      std::vector<std::int64_t> idx;
      idx.reserve(a.target.indices.size());
      for (const auto& e : a.target.indices) idx.push_back(ast::eval_expr(e, env));
      g.prop = spec.props.resolve(a.target.name, idx);
      std::int64_t v = ast::eval_expr(a.value, env);
      if (v != 0 && v != 1)
        throw SpecError("set value must be 0 or 1, got " + std::to_string(v));
      g.value = v == 1;
      break;
    }
  }
  return g;
}

void collect_steps(const ast::Term& t, const SystemSpec& spec, const ast::Env& env,
                   std::span<const std::uint32_t> agent_ids, FormulaInterner& formulas,
                   std::vector<AgentStep>& out, int depth) {
  if (depth > kMaxUnfoldDepth)
    throw std::logic_error("constant unfolding did not reach an action prefix");
  switch (t->kind) {
    case ast::TermNode::Kind::Nil:
      return;
    case ast::TermNode::Kind::Sum: {
      for (const auto& s : t->summands) {
        if (s.kind == ast::Summand::Kind::Guarded) {
          out.push_back(
              AgentStep{ground_action(s.act, spec, env, agent_ids, formulas), s.cont});
        } else {
          for (auto& br : ast::expand_indexed_sum(s, env))
            out.push_back(AgentStep{ground_action(br.act, spec, env, agent_ids, formulas),
                                    br.cont});
        }
      }
      return;
    }
    case ast::TermNode::Kind::Call: {
      const ast::ConstDef* def = spec.find_const(t->callee);
      if (!def) throw SpecError("unknown constant " + t->callee);
      if (def->formals.size() != t->args.size())
        throw SpecError("constant " + t->callee + " arity mismatch");
      ast::Bindings binds;
      for (std::size_t i = 0; i < def->formals.size(); ++i)
        binds[def->formals[i]] = ast::eval_expr(t->args[i], env);
      ast::Term body = substitute(def->body, binds);
      collect_steps(body, spec, env, agent_ids, formulas, out, depth + 1);
      return;
    }
  }
}

}  // namespace

std::vector<AgentStep> agent_steps(const ast::Term& t, const SystemSpec& spec,
                                   FormulaInterner& formulas) {
  std::vector<AgentStep> out;
  ast::Env env = spec.global_env();
  std::vector<std::uint32_t> ids = spec.agent_ids();
  collect_steps(t, spec, env, ids, formulas, out, 0);
  return out;
}

// ------------------------------------------------------------------ context

EngineContext::EngineContext(const SystemSpec& spec)
    : spec_(&spec),
      at_size_(spec.props.size()),
      agent_ids_(spec.agent_ids()),
      global_env_(spec.global_env()) {
  if (at_size_ > 25)
    throw SpecError("proposition universe of size " + std::to_string(at_size_) +
                    " is too large to materialize (limit 25)");
  assert(std::is_sorted(agent_ids_.begin(), agent_ids_.end()));
}

std::uint32_t EngineContext::slot_of(std::uint32_t agent_id) const {
  auto it = std::lower_bound(agent_ids_.begin(), agent_ids_.end(), agent_id);
  if (it == agent_ids_.end() || *it != agent_id)
    throw SpecError("unknown agent " + std::to_string(agent_id));
  return static_cast<std::uint32_t>(it - agent_ids_.begin());
}

RelPtr EngineContext::intern(PartitionRelation r) {
  std::lock_guard lock(rel_mu_);
  std::uint64_t h = r.hash();
  auto& bucket = rel_index_[h];
  for (const RelPtr& p : bucket)
    if (*p == r) return p;
  auto ptr = std::make_shared<const PartitionRelation>(std::move(r));
  bucket.push_back(ptr);
  rel_ids_.emplace(ptr.get(), next_rel_id_++);
  return ptr;
}

std::uint32_t EngineContext::rel_id(const RelPtr& r) const {
  {
    std::lock_guard lock(rel_mu_);
    auto it = rel_ids_.find(r.get());
    if (it != rel_ids_.end()) return it->second;
  }
  // Relations built outside this context are interned by content on first
  // sight, so ids keep identifying relations injectively.
  auto* self = const_cast<EngineContext*>(this);
  RelPtr canonical = self->intern(PartitionRelation(*r));
  std::lock_guard lock(rel_mu_);
  std::uint32_t id = rel_ids_.at(canonical.get());
  self->rel_ids_.emplace(r.get(), id);
  return id;
}

KripkeModel EngineContext::model_for(std::span<const RelPtr> rels) const {
  KripkeModel m;
  m.at_size = at_size_;
  m.agent_ids = agent_ids_;
  m.rels.assign(rels.begin(), rels.end());
  return m;
}

const WorldSet& EngineContext::sat(std::span<const RelPtr> rels, EFormula f) {
  KripkeModel m = model_for(rels);
  if (const WorldSet* hit = lookup(f, m)) return *hit;
  WorldSet s = sat_set(m, f, this);
  // sat_set already stored the root through the memo hook.
  const WorldSet* stored = lookup(f, m);
  if (stored) return *stored;
  return *store(f, m, std::move(s));
}

std::size_t EngineContext::SatKeyHash::operator()(const SatKey& k) const {
  std::uint64_t h = hash_mix(kFnvOffset, reinterpret_cast<std::uintptr_t>(k.f));
  for (auto id : k.rel_ids) h = hash_mix(h, id);
  return static_cast<std::size_t>(h);
}

const WorldSet* EngineContext::lookup(EFormula f, const KripkeModel& m) {
  SatKey key{f, {}};
  key.rel_ids.reserve(f->agents.size());
  for (std::uint32_t id : f->agents) key.rel_ids.push_back(rel_id(m.rels[m.slot_of(id)]));
  std::lock_guard lock(sat_mu_);
  auto it = sat_cache_.find(key);
  return it == sat_cache_.end() ? nullptr : it->second.get();
}

const WorldSet* EngineContext::store(EFormula f, const KripkeModel& m, WorldSet s) {
  SatKey key{f, {}};
  key.rel_ids.reserve(f->agents.size());
  for (std::uint32_t id : f->agents) key.rel_ids.push_back(rel_id(m.rels[m.slot_of(id)]));
  std::lock_guard lock(sat_mu_);
  auto [it, fresh] = sat_cache_.try_emplace(std::move(key), nullptr);
  if (fresh) it->second = std::make_unique<WorldSet>(std::move(s));
  return it->second.get();
}

PoolState EngineContext::initial_state() const {
  PoolState st;
  st.x = static_cast<World>(spec_->init_mask);
  auto* self = const_cast<EngineContext*>(this);
  for (const auto& a : spec_->agents) {
    st.terms.push_back(a.init);
    PartitionRelation r;
    switch (a.obs.kind) {
      case ast::ObservesClause::Kind::All:
        r = PartitionRelation::identity(n_worlds());
        break;
      case ast::ObservesClause::Kind::None:
        r = PartitionRelation::single(n_worlds());
        break;
      case ast::ObservesClause::Kind::Props: {
        std::uint32_t mask = 0;
        for (std::uint32_t k : a.obs.props) mask |= 1u << k;
        r = PartitionRelation::agreement(at_size_, mask);
        break;
      }
    }
    st.rels.push_back(self->intern(std::move(r)));
  }
  return st;
}

// ---------------------------------------------------------------- stepping

PoolState apply_set(EngineContext& ctx, const PoolState& s, std::uint32_t slot,
                    std::uint32_t prop, bool value, ast::Term cont) {
  const std::uint32_t bit = 1u << prop;
  PoolState t = s;
  t.x = value ? (s.x | bit) : (s.x & ~bit);
  t.terms[slot] = std::move(cont);

  WorldSet satp(ctx.n_worlds());
  for (std::uint32_t w = 0; w < ctx.n_worlds(); ++w)
    if (w & bit) satp.set(w);

  for (std::uint32_t k = 0; k < t.rels.size(); ++k) {
    if (k == slot)
      t.rels[k] = ctx.intern(split_by(*s.rels[k], satp));
    else
      t.rels[k] = ctx.intern(merge_on_prop(*s.rels[k], prop));
  }
  return t;
}

PoolState apply_com(EngineContext& ctx, const PoolState& s, std::uint32_t sender_slot,
                    std::uint32_t receiver_slot, EFormula payload, ast::Term sender_cont,
                    ast::Term receiver_cont) {
  const std::uint32_t sender_id = ctx.agent_ids()[sender_slot];
  EFormula premise = ctx.formulas().know(sender_id, payload);
  if (!ctx.sat(s.rels, premise).test(s.x))
    throw std::logic_error("communication fired without its knowledge premise");

  PoolState t = s;
  t.terms[sender_slot] = std::move(sender_cont);
  t.terms[receiver_slot] = std::move(receiver_cont);
  const WorldSet& satf = ctx.sat(s.rels, payload);
  t.rels[receiver_slot] = ctx.intern(split_by(*s.rels[receiver_slot], satf));
  return t;
}

std::vector<std::pair<Label, PoolState>> pool_steps(EngineContext& ctx, const PoolState& s) {
  const SystemSpec& spec = ctx.spec();
  const std::size_t n = s.terms.size();
  std::vector<std::vector<AgentStep>> steps(n);
  for (std::size_t i = 0; i < n; ++i)
    steps[i] = agent_steps(s.terms[i], spec, ctx.formulas());

  std::vector<std::pair<Label, PoolState>> out;

  // (internal) visible autonomous actions
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& st : steps[i]) {
      if (st.action.kind != ast::Action::Kind::Internal) continue;
      PoolState t = s;
      t.terms[i] = st.cont;
      out.emplace_back(Label::visible(ctx.agent_ids()[i], st.action.name), std::move(t));
    }
  }

  // (set) assignments
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& st : steps[i]) {
      if (st.action.kind != ast::Action::Kind::Set) continue;
      out.emplace_back(Label::make_tau(),
                       apply_set(ctx, s, static_cast<std::uint32_t>(i), st.action.prop,
                                 st.action.value, st.cont));
    }
  }

  // (com) synchronizations, gated by the sender's knowledge of the payload
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t sender_id = ctx.agent_ids()[i];
    for (const auto& st : steps[i]) {
      if (st.action.kind != ast::Action::Kind::Output) continue;
      if (st.action.dest < 0 || st.action.dest == static_cast<std::int64_t>(sender_id))
        continue;
      auto ids = ctx.agent_ids();
      auto it = std::lower_bound(ids.begin(), ids.end(),
                                 static_cast<std::uint32_t>(st.action.dest));
      if (it == ids.end() || *it != static_cast<std::uint32_t>(st.action.dest)) continue;
      const std::uint32_t j = static_cast<std::uint32_t>(it - ids.begin());

      bool premise_checked = false;
      bool premise_holds = false;
      for (const auto& rt : steps[j]) {
        if (rt.action.kind != ast::Action::Kind::Input) continue;
        if (rt.action.name != st.action.name) continue;
        if (!premise_checked) {
          premise_checked = true;
          EFormula know = ctx.formulas().know(sender_id, st.action.payload);
          premise_holds = ctx.sat(s.rels, know).test(s.x);
          if (premise_holds && !ctx.sat(s.rels, st.action.payload).test(s.x))
            throw std::logic_error(
                "knowledge premise held for a payload false at the valuation");
        }
        if (!premise_holds) break;

        ast::Bindings binds;
        if (!rt.action.bind_y.empty())
          binds[rt.action.bind_y] = static_cast<std::int64_t>(sender_id);
        if (!rt.action.bind_f.empty())
          binds[rt.action.bind_f] =
              ast::formula_from_ground(st.action.payload, spec.props);
        ast::Term receiver_cont = substitute(rt.cont, binds);

        out.emplace_back(Label::make_tau(),
                         apply_com(ctx, s, static_cast<std::uint32_t>(i), j,
                                   st.action.payload, st.cont, std::move(receiver_cont)));
      }
    }
  }

  return out;
}

std::string canonical_key(EngineContext& ctx, const PoolState& s) {
  std::string key;
  for (std::size_t i = 0; i < s.terms.size(); ++i) {
    key += ast::print_term(s.terms[i]);
    key += '\x1e';
    std::uint32_t rid = ctx.rel_id(s.rels[i]);
    key.append(reinterpret_cast<const char*>(&rid), sizeof rid);
    key += '\x1f';
  }
  key.append(reinterpret_cast<const char*>(&s.x), sizeof s.x);
  return key;
}

// ------------------------------------------------------------------ graphs

KripkeModel KltsGraph::model_of(std::uint32_t s) const {
  KripkeModel m;
  m.at_size = meta->at_size();
  m.agent_ids = meta->agent_ids;
  m.rels = states[s].rels;
  return m;
}

void KltsGraph::finalize() {
  std::stable_sort(trans.begin(), trans.end(),
                   [](const KltsTransition& a, const KltsTransition& b) {
                     return a.src < b.src;
                   });
  first_edge_.assign(states.size() + 1, 0);
  for (const auto& t : trans) ++first_edge_[t.src + 1];
  for (std::size_t i = 1; i < first_edge_.size(); ++i)
    first_edge_[i] += first_edge_[i - 1];
}

std::span<const KltsTransition> KltsGraph::out(std::uint32_t s) const {
  assert(first_edge_.size() == states.size() + 1);
  return {trans.data() + first_edge_[s], trans.data() + first_edge_[s + 1]};
}

ExploreResult explore(const SystemSpec& spec, const ExploreOptions& opts) {
  EngineContext ctx(spec);

  std::vector<PoolState> pstates;
  std::unordered_map<std::string, std::uint32_t> ids;

  PoolState root = ctx.initial_state();
  ids.emplace(canonical_key(ctx, root), 0);
  pstates.push_back(std::move(root));

  KltsGraph g;
  auto meta = std::make_shared<KltsMeta>();
  meta->prop_names = spec.props.names;
  meta->agent_ids = spec.agent_ids();
  g.meta = meta;

  bool parallel = opts.parallel && kern::parallel_enabled();
  std::uint32_t layer_begin = 0, layer_end = 1, depth = 0;

  while (layer_begin < layer_end) {
    if (depth >= opts.max_depth) {
      g.truncated = true;
      g.truncation_reason = "depth limit";
      break;
    }

    const std::int64_t m = layer_end - layer_begin;
    std::vector<std::vector<std::pair<Label, PoolState>>> succs(m);
    std::exception_ptr err;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
#endif
    for (std::int64_t k = 0; k < m; ++k) {
      try {
        succs[k] = pool_steps(ctx, pstates[layer_begin + k]);
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        if (!err) err = std::current_exception();
      }
    }
    (void)parallel;
    if (err) std::rethrow_exception(err);

    for (std::int64_t k = 0; k < m; ++k) {
      const std::uint32_t src = layer_begin + static_cast<std::uint32_t>(k);
      for (auto& [label, ps] : succs[k]) {
        std::string key = canonical_key(ctx, ps);
        auto it = ids.find(key);
        std::uint32_t dst;
        if (it != ids.end()) {
          dst = it->second;
        } else {
          if (pstates.size() >= opts.max_states) {
            g.truncated = true;
            g.truncation_reason = "state limit";
            continue;
          }
          dst = static_cast<std::uint32_t>(pstates.size());
          ids.emplace(std::move(key), dst);
          pstates.push_back(std::move(ps));
        }
        g.trans.push_back(KltsTransition{src, label, dst});
      }
    }

    layer_begin = layer_end;
    layer_end = static_cast<std::uint32_t>(pstates.size());
    ++depth;
  }

  g.states.reserve(pstates.size());
  for (const auto& ps : pstates) {
    KltsState st;
    st.x = ps.x;
    st.rels = ps.rels;
    st.terms.reserve(ps.terms.size());
    for (const auto& t : ps.terms) st.terms.push_back(ast::print_term(t));
    g.states.push_back(std::move(st));
  }
  g.root = 0;
  g.finalize();

  return ExploreResult{std::move(g), depth};
}

Lts project_lts(const KltsGraph& g) {
  Lts out;
  out.n_states = g.n_states();
  out.root = g.root;
  out.trans = g.trans;
  return out;
}

// ------------------------------------------------------------------- dumps

std::string dump_graph(const KltsGraph& g, const DumpOptions& opts) {
  RelDumpMode mode = opts.relations;
  if (mode == RelDumpMode::Auto)
    mode = g.meta->at_size() <= 6 ? RelDumpMode::Full : RelDumpMode::Hash;

  std::string out = std::to_string(g.n_states()) + " " + std::to_string(g.trans.size()) +
                    " " + std::to_string(g.root) + "\n";
  const auto& names = g.meta->prop_names;
  for (std::uint32_t i = 0; i < g.n_states(); ++i) {
    const auto& st = g.states[i];
    out += "STATE " + std::to_string(i) + " X=";
    for (std::uint32_t k = 0; k < g.meta->at_size(); ++k)
      out += (st.x >> k & 1) ? '1' : '0';
    out += " AGENTS=";
    for (std::size_t a = 0; a < g.meta->agent_ids.size(); ++a) {
      if (a) out += ";";
      out += std::to_string(g.meta->agent_ids[a]) + ":";
      out += a < st.terms.size() && !st.terms[a].empty() ? st.terms[a] : "-";
    }
    for (std::size_t a = 0; a < st.rels.size(); ++a) {
      out += " REL[" + std::to_string(g.meta->agent_ids[a]) + "]=";
      if (mode == RelDumpMode::Full) {
        out += format_relation_blocks(*st.rels[a], names);
      } else {
        const auto& r = *st.rels[a];
        out += std::to_string(r.n_blocks()) + "#" +
               hex64(fnv1a64(r.blocks().data(), r.blocks().size() * sizeof(std::uint32_t)));
      }
    }
    out += "\n";
  }
  for (const auto& t : g.trans)
    out += "TRANS " + std::to_string(t.src) + " " + t.label.str() + " " +
           std::to_string(t.dst) + "\n";
  return out;
}

}  // namespace kepal
