#include "kepal/kripke.hpp"

#include <algorithm>
#include <cassert>

#include "kepal/kern.hpp"
#include "kepal/util.hpp"

namespace kepal {

SatCache::Key SatCache::make_key(EFormula f, const KripkeModel& m) {
  Key k{f, {}};
  k.rels.reserve(f->agents.size());
  for (std::uint32_t id : f->agents) k.rels.push_back(m.rels[m.slot_of(id)].get());
  return k;
}

std::size_t SatCache::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = hash_mix(kFnvOffset, reinterpret_cast<std::uintptr_t>(k.f));
  for (const auto* r : k.rels) h = hash_mix(h, reinterpret_cast<std::uintptr_t>(r));
  return static_cast<std::size_t>(h);
}

const WorldSet* SatCache::lookup(EFormula f, const KripkeModel& m) {
  Key k = make_key(f, m);
  std::lock_guard lock(mu_);
  auto it = cache_.find(k);
  return it == cache_.end() ? nullptr : it->second.get();
}

const WorldSet* SatCache::store(EFormula f, const KripkeModel& m, WorldSet s) {
  Key k = make_key(f, m);
  std::lock_guard lock(mu_);
  for (std::uint32_t id : f->agents) pins_.push_back(m.rels[m.slot_of(id)]);
  auto [it, fresh] = cache_.try_emplace(std::move(k), nullptr);
  if (fresh) it->second = std::make_unique<WorldSet>(std::move(s));
  return it->second.get();
}

std::uint32_t KripkeModel::slot_of(std::uint32_t agent_id) const {
  auto it = std::lower_bound(agent_ids.begin(), agent_ids.end(), agent_id);
  if (it == agent_ids.end() || *it != agent_id)
    throw SpecError("unknown agent " + std::to_string(agent_id) + " in formula");
  return static_cast<std::uint32_t>(it - agent_ids.begin());
}

WorldSet sat_set(const KripkeModel& m, EFormula f, SatMemo* memo) {
  if (memo)
    if (const WorldSet* hit = memo->lookup(f, m)) return *hit;

  WorldSet out;
  switch (f->kind) {
    case FormulaNode::Kind::True:
      out = WorldSet::full(m.n_worlds());
      break;
    case FormulaNode::Kind::Prop: {
      assert(f->prop < m.at_size);
      out = WorldSet(m.n_worlds());
      const std::uint32_t bit = 1u << f->prop;
      for (std::uint32_t w = 0; w < m.n_worlds(); ++w)
        if (w & bit) out.set(w);
      break;
    }
    case FormulaNode::Kind::Not:
      out = sat_set(m, f->a, memo);
      out.complement();
      break;
    case FormulaNode::Kind::And:
      out = sat_set(m, f->a, memo);
      out &= sat_set(m, f->b, memo);
      break;
    case FormulaNode::Kind::Know: {
      WorldSet inner = sat_set(m, f->a, memo);
      kern::know_filter(*m.rels[m.slot_of(f->agent)], inner, out);
      break;
    }
  }

  if (memo) return *memo->store(f, m, std::move(out));
  return out;
}

bool holds_at(const KripkeModel& m, World x, EFormula f, SatMemo* memo) {
  return sat_set(m, f, memo).test(x);
}

bool diff_oracle(const KripkeModel& m, World x, World y, EFormula f) {
  WorldSet s = sat_set(m, f);
  return s.test(x) != s.test(y);
}

bool PairSet::contains(World a, World b) const {
  return std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) != pairs.end();
}

void PairSet::sort_unique() {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
}

namespace {

std::vector<std::vector<bool>> pair_matrix(const PairSet& r) {
  std::vector<std::vector<bool>> m(r.n_worlds, std::vector<bool>(r.n_worlds, false));
  for (auto [a, b] : r.pairs) m[a][b] = true;
  return m;
}

}  // namespace

bool relation_is(const PairSet& r, RelProp p) {
  auto m = pair_matrix(r);
  const std::uint32_t n = r.n_worlds;
  switch (p) {
    case RelProp::Reflexive:
      for (std::uint32_t w = 0; w < n; ++w)
        if (!m[w][w]) return false;
      return true;
    case RelProp::Symmetric:
      for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = 0; b < n; ++b)
          if (m[a][b] != m[b][a]) return false;
      return true;
    case RelProp::Transitive:
      for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = 0; b < n; ++b) {
          if (!m[a][b]) continue;
          for (std::uint32_t c = 0; c < n; ++c)
            if (m[b][c] && !m[a][c]) return false;
        }
      return true;
  }
  return false;
}

bool relation_is(const PartitionRelation&, RelProp) {
  // A partition induces an equivalence by construction.
  return true;
}

PartitionRelation partition_from_pairs(const PairSet& r) {
  if (!relation_is(r, RelProp::Reflexive))
    throw SpecError("pair set is not reflexive");
  if (!relation_is(r, RelProp::Symmetric))
    throw SpecError("pair set is not symmetric");
  if (!relation_is(r, RelProp::Transitive))
    throw SpecError("pair set is not transitive");

  std::vector<std::uint32_t> block(r.n_worlds, UINT32_MAX);
  std::uint32_t next = 0;
  auto m = pair_matrix(r);
  for (std::uint32_t w = 0; w < r.n_worlds; ++w) {
    if (block[w] != UINT32_MAX) continue;
    block[w] = next;
    for (std::uint32_t v = w + 1; v < r.n_worlds; ++v)
      if (m[w][v]) block[v] = next;
    ++next;
  }
  return PartitionRelation::adopt(std::move(block), next);
}

PairSet pairs_from_partition(const PartitionRelation& r) {
  PairSet out;
  out.n_worlds = r.n_worlds();
  for (std::uint32_t a = 0; a < r.n_worlds(); ++a)
    for (std::uint32_t b = 0; b < r.n_worlds(); ++b)
      if (r.same_block(a, b)) out.pairs.emplace_back(a, b);
  return out;
}

std::string format_world(World w, std::span<const std::string> prop_names) {
  std::string out = "{";
  bool first = true;
  for (std::uint32_t k = 0; k < prop_names.size(); ++k) {
    if (!(w & (1u << k))) continue;
    if (!first) out += ",";
    out += prop_names[k];
    first = false;
  }
  return out + "}";
}

std::string format_relation_blocks(const PartitionRelation& r,
                                   std::span<const std::string> prop_names) {
  std::vector<std::vector<World>> blocks(r.n_blocks());
  for (std::uint32_t w = 0; w < r.n_worlds(); ++w) blocks[r.block_of(w)].push_back(w);
  std::string out;
  for (std::uint32_t b = 0; b < blocks.size(); ++b) {
    if (b) out += " ";
    out += "{";
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      if (i) out += ",";
      out += format_world(blocks[b][i], prop_names);
    }
    out += "}";
  }
  return out;
}

}  // namespace kepal
