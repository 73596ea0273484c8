#include "kepal/bisim.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "kepal/kern.hpp"

namespace kepal {

namespace {

void require_same_shape(const KripkeModel& a, const KripkeModel& b) {
  if (a.at_size != b.at_size)
    throw SpecError("point equivalence over mismatched proposition universes");
  if (a.agent_ids != b.agent_ids)
    throw SpecError("point equivalence over mismatched agent sets");
}

/// Worlds reachable from v under the union of every relation in both
/// families, by block saturation.
WorldSet reachable_worlds(const KripkeModel& a, const KripkeModel& b, World v) {
  const std::uint32_t n = a.n_worlds();
  WorldSet w(n);
  w.set(v);
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& fam : {&a.rels, &b.rels}) {
      for (const auto& rel : *fam) {
        std::vector<std::uint8_t> hit(rel->n_blocks(), 0);
        w.for_each([&](std::uint32_t x) { hit[rel->block_of(x)] = 1; });
        for (std::uint32_t x = 0; x < n; ++x) {
          if (!hit[rel->block_of(x)] || w.test(x)) continue;
          w.set(x);
          grew = true;
        }
      }
    }
  }
  return w;
}

/// Canonical relabeling of a partition restricted to W (ascending world
/// order); two partitions agree on W iff the labelings match.
std::vector<std::uint32_t> restricted_canon(const PartitionRelation& r, const WorldSet& w) {
  std::vector<std::uint32_t> out;
  std::unordered_map<std::uint32_t, std::uint32_t> newid;
  w.for_each([&](std::uint32_t x) {
    auto [it, fresh] = newid.try_emplace(r.block_of(x),
                                         static_cast<std::uint32_t>(newid.size()));
    (void)fresh;
    out.push_back(it->second);
  });
  return out;
}

}  // namespace

bool kripke_point_equiv(const KripkeModel& a, World va, const KripkeModel& b, World vb) {
  require_same_shape(a, b);
  if (va != vb) return false;
  WorldSet w = reachable_worlds(a, b, va);
  for (std::size_t i = 0; i < a.rels.size(); ++i)
    if (restricted_canon(*a.rels[i], w) != restricted_canon(*b.rels[i], w)) return false;
  return true;
}

namespace {

/// Fingerprint of the pointed per-state model: the valuation, the world
/// set reachable under the state's own family, and each relation's
/// canonical restriction to it. Equal fingerprints are exactly pointwise
/// equivalence: on the reachable part equal families have equal reach.
std::string point_fingerprint(const KltsGraph& g, std::uint32_t s) {
  KripkeModel m = g.model_of(s);
  WorldSet w = reachable_worlds(m, m, g.states[s].x);
  std::string fp;
  fp.append(reinterpret_cast<const char*>(&g.states[s].x), sizeof(World));
  w.for_each([&](std::uint32_t x) {
    fp.append(reinterpret_cast<const char*>(&x), sizeof x);
  });
  for (const auto& rel : m.rels) {
    fp += '\x1f';
    auto canon = restricted_canon(*rel, w);
    fp.append(reinterpret_cast<const char*>(canon.data()), canon.size() * sizeof(std::uint32_t));
  }
  return fp;
}

using Sig = std::vector<std::pair<Label, std::uint32_t>>;

Sig signature(const KltsGraph& g, std::uint32_t s, const std::vector<std::uint32_t>& block) {
  Sig sig;
  for (const auto& t : g.out(s)) sig.emplace_back(t.label, block[t.dst]);
  std::sort(sig.begin(), sig.end());
  sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
  return sig;
}

}  // namespace

BisimVerdict bisimilar(const KltsGraph& g, std::uint32_t s, std::uint32_t t) {
  const std::uint32_t n = g.n_states();
  if (s >= n || t >= n) throw SpecError("unknown state id");

  BisimVerdict v;
  v.blocks.assign(n, 0);

  // Round 0: valuation plus pointwise model equivalence.
  {
    std::map<std::string, std::uint32_t> ids;
    for (std::uint32_t i = 0; i < n; ++i) {
      auto [it, fresh] =
          ids.try_emplace(point_fingerprint(g, i), static_cast<std::uint32_t>(ids.size()));
      (void)fresh;
      v.blocks[i] = it->second;
    }
    v.n_blocks = static_cast<std::uint32_t>(ids.size());
  }

  // Split by (label, successor block) signatures until stable.
  while (true) {
    std::map<std::pair<std::uint32_t, Sig>, std::uint32_t> ids;
    std::vector<std::uint32_t> next(n);
    const std::int64_t nn = n;
    std::vector<Sig> sigs(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n >= 512)
#endif
    for (std::int64_t i = 0; i < nn; ++i)
      sigs[i] = signature(g, static_cast<std::uint32_t>(i), v.blocks);
    for (std::uint32_t i = 0; i < n; ++i) {
      auto [it, fresh] = ids.try_emplace(std::make_pair(v.blocks[i], std::move(sigs[i])),
                                         static_cast<std::uint32_t>(ids.size()));
      (void)fresh;
      next[i] = it->second;
    }
    std::uint32_t count = static_cast<std::uint32_t>(ids.size());
    if (count == v.n_blocks) break;
    v.blocks = std::move(next);
    v.n_blocks = count;
    ++v.rounds;
  }

  v.equal = v.blocks[s] == v.blocks[t];
  if (!v.equal) {
    if (g.states[s].x != g.states[t].x) {
      v.diagnostic = "condition 1: valuations differ";
    } else if (!kripke_point_equiv(g.model_of(s), g.states[s].x, g.model_of(t),
                                   g.states[t].x)) {
      v.diagnostic = "condition 3: per-state Kripke models differ on the reachable part";
    } else {
      Sig ss = signature(g, s, v.blocks);
      Sig st = signature(g, t, v.blocks);
      Sig diff;
      std::set_symmetric_difference(ss.begin(), ss.end(), st.begin(), st.end(),
                                    std::back_inserter(diff));
      v.diagnostic = "condition 2: transition ";
      if (!diff.empty())
        v.diagnostic += "labeled " + diff[0].first.str() + " into refinement class " +
                        std::to_string(diff[0].second) + " ";
      v.diagnostic += "matched by one state only";
    }
  }
  return v;
}

std::pair<KltsGraph, std::uint32_t> disjoint_union(const KltsGraph& a, const KltsGraph& b) {
  if (a.meta->prop_names != b.meta->prop_names)
    throw SpecError("cannot compare systems over different proposition universes");
  if (a.meta->agent_ids != b.meta->agent_ids)
    throw SpecError("cannot compare systems over different agent sets");
  KltsGraph g;
  g.meta = a.meta;
  g.states = a.states;
  g.states.insert(g.states.end(), b.states.begin(), b.states.end());
  g.trans = a.trans;
  const std::uint32_t off = a.n_states();
  for (const auto& t : b.trans)
    g.trans.push_back(KltsTransition{t.src + off, t.label, t.dst + off});
  g.root = a.root;
  g.truncated = a.truncated || b.truncated;
  g.finalize();
  return {std::move(g), off};
}

// ------------------------------------------------------------ modal equiv

namespace {

/// Per-state satisfaction sets of an epistemic formula; the semantic
/// identity relevant for building larger formulas.
struct EpiCand {
  EFormula f;
  std::vector<WorldSet> sats;  // per state
};

struct EpiPool {
  std::vector<EpiCand> items;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;
  std::size_t cap;

  explicit EpiPool(std::size_t cap) : cap(cap) {}

  static std::uint64_t hash(const std::vector<WorldSet>& sats) {
    std::uint64_t h = kFnvOffset;
    for (const auto& s : sats)
      for (auto w : s.words()) h = hash_mix(h, w);
    return h;
  }

  bool add(EFormula f, std::vector<WorldSet> sats) {
    if (items.size() >= cap) return false;
    std::uint64_t h = hash(sats);
    for (std::size_t i : index[h])
      if (items[i].sats == sats) return false;
    index[h].push_back(items.size());
    items.push_back(EpiCand{f, std::move(sats)});
    return true;
  }
};

struct KtCand {
  KtFormula f;
  StateSet sat;
};

struct KtPool {
  std::vector<KtCand> items;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;
  std::size_t cap;

  explicit KtPool(std::size_t cap) : cap(cap) {}

  bool add(KtFormula f, StateSet sat) {
    if (items.size() >= cap) return false;
    std::uint64_t h = sat.hash();
    for (std::size_t i : index[h])
      if (items[i].sat == sat) return false;
    index[h].push_back(items.size());
    items.push_back(KtCand{std::move(f), std::move(sat)});
    return true;
  }
};

std::vector<WorldSet> epi_sats(const KltsGraph& g, EFormula f) {
  std::vector<WorldSet> out;
  out.reserve(g.n_states());
  for (std::uint32_t s = 0; s < g.n_states(); ++s)
    out.push_back(sat_set(g.model_of(s), f));
  return out;
}

void epi_bool_closure(const KltsGraph& g, EpiPool& pool, FormulaInterner& in, int rounds) {
  for (int r = 0; r < rounds; ++r) {
    std::size_t end = pool.items.size();
    for (std::size_t i = 0; i < end; ++i) {
      std::vector<WorldSet> neg;
      neg.reserve(g.n_states());
      for (const auto& s : pool.items[i].sats) neg.push_back(~s);
      pool.add(in.negate(pool.items[i].f), std::move(neg));
    }
    for (std::size_t i = 0; i < end; ++i) {
      for (std::size_t j = i + 1; j < end; ++j) {
        std::vector<WorldSet> both;
        both.reserve(g.n_states());
        for (std::uint32_t s = 0; s < g.n_states(); ++s)
          both.push_back(pool.items[i].sats[s] & pool.items[j].sats[s]);
        pool.add(in.conj(pool.items[i].f, pool.items[j].f), std::move(both));
      }
    }
  }
}

void kt_bool_closure(KtPool& pool, int rounds) {
  for (int r = 0; r < rounds; ++r) {
    std::size_t end = pool.items.size();
    for (std::size_t i = 0; i < end; ++i)
      pool.add(kt_not(pool.items[i].f), ~pool.items[i].sat);
    for (std::size_t i = 0; i < end; ++i)
      for (std::size_t j = i + 1; j < end; ++j)
        pool.add(kt_and(pool.items[i].f, pool.items[j].f),
                 pool.items[i].sat & pool.items[j].sat);
  }
}

}  // namespace

ModalEquivResult modal_equiv(const KltsGraph& g, std::uint32_t s, std::uint32_t t,
                             const ModalEquivOptions& opts, FormulaInterner& in) {
  const std::uint32_t n = g.n_states();
  if (s >= n || t >= n) throw SpecError("unknown state id");
  const std::uint32_t at = g.meta->at_size();

  // Epistemic basis, deduplicated by per-state satisfaction sets.
  EpiPool epool(opts.pool_cap);
  epool.add(in.truth(), epi_sats(g, in.truth()));
  for (std::uint32_t k = 0; k < at; ++k) epool.add(in.prop(k), epi_sats(g, in.prop(k)));
  epi_bool_closure(g, epool, in, 2);
  for (int d = 0; d < opts.epi_depth; ++d) {
    std::size_t end = epool.items.size();
    for (std::size_t i = 0; i < end; ++i) {
      for (std::size_t a = 0; a < g.meta->agent_ids.size(); ++a) {
        std::uint32_t id = g.meta->agent_ids[a];
        std::vector<WorldSet> sats;
        sats.reserve(n);
        for (std::uint32_t st = 0; st < n; ++st) {
          WorldSet out;
          kern::serial::know_filter(*g.states[st].rels[a], epool.items[i].sats[st], out);
          sats.push_back(std::move(out));
        }
        epool.add(in.know(id, epool.items[i].f), std::move(sats));
      }
    }
    epi_bool_closure(g, epool, in, 2);
  }

  // Diamond labels occurring in the graph, plus the wildcard.
  std::vector<LabelPattern> pats;
  pats.push_back(LabelPattern{true, {}});
  {
    std::vector<Label> labels;
    for (const auto& tr : g.trans) labels.push_back(tr.label);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (auto& l : labels) pats.push_back(LabelPattern{false, std::move(l)});
  }

  // Temporal layer over the epistemic basis.
  KtPool pool(opts.pool_cap);
  for (std::uint32_t k = 0; k < at; ++k) {
    StateSet sat(n);
    for (std::uint32_t st = 0; st < n; ++st)
      if (g.states[st].x >> k & 1) sat.set(st);
    pool.add(kt_prop(k), std::move(sat));
  }
  for (const auto& cand : epool.items) {
    StateSet sat(n);
    for (std::uint32_t st = 0; st < n; ++st)
      if (cand.sats[st].test(g.states[st].x)) sat.set(st);
    pool.add(kt_epistemic(cand.f), std::move(sat));
  }
  kt_bool_closure(pool, 2);

  for (int d = 0; d < opts.depth; ++d) {
    std::size_t end = pool.items.size();
    for (const auto& pat : pats) {
      for (std::size_t i = 0; i < end; ++i) {
        StateSet pre(n);
        for (const auto& tr : g.trans)
          if (pat.matches(tr.label) && pool.items[i].sat.test(tr.dst)) pre.set(tr.src);
        pool.add(kt_diamond(pat, pool.items[i].f), std::move(pre));
      }
    }
    kt_bool_closure(pool, 2);
  }

  ModalEquivResult res;
  res.formulas = pool.items.size();
  res.equal = true;
  for (const auto& cand : pool.items) {
    if (cand.sat.test(s) != cand.sat.test(t)) {
      res.equal = false;
      res.distinguishing = format_kt(cand.f, g.meta->prop_names);
      break;
    }
  }
  return res;
}

}  // namespace kepal
