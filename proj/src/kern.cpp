#include "kepal/kern.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kepal::kern {

namespace {

std::atomic<bool> g_parallel{true};

bool use_parallel(std::uint32_t n) {
#ifdef _OPENMP
  return g_parallel.load(std::memory_order_relaxed) && n >= kParallelThreshold;
#else
  (void)n;
  return false;
#endif
}

void atomic_min(std::atomic<std::uint32_t>& slot, std::uint32_t v) {
  std::uint32_t cur = slot.load(std::memory_order_relaxed);
  while (v < cur &&
         !slot.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
  }
}

struct UnionFind {
  explicit UnionFind(std::uint32_t n) : parent(n) {
    for (std::uint32_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::uint32_t> parent;
};

/// Canonical relabeling for bounded keys: new ids ordered by the first
/// world carrying each key. `key` must be < n_keys for every world.
PartitionRelation canonicalize_bounded(std::uint32_t n_worlds, std::uint32_t n_keys,
                                       const std::function<std::uint32_t(std::uint32_t)>& key,
                                       bool parallel) {
  std::vector<std::uint32_t> newid(n_keys, UINT32_MAX);
  std::vector<std::uint32_t> out(n_worlds);
  std::uint32_t n_blocks = 0;

  if (!parallel) {
    for (std::uint32_t w = 0; w < n_worlds; ++w) {
      std::uint32_t k = key(w);
      if (newid[k] == UINT32_MAX) newid[k] = n_blocks++;
      out[w] = newid[k];
    }
    return PartitionRelation::adopt(std::move(out), n_blocks);
  }

  std::vector<std::atomic<std::uint32_t>> first(n_keys);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(n_keys); ++k)
    first[k].store(UINT32_MAX, std::memory_order_relaxed);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t w = 0; w < static_cast<std::int64_t>(n_worlds); ++w)
    atomic_min(first[key(static_cast<std::uint32_t>(w))],
               static_cast<std::uint32_t>(w));

  std::vector<std::pair<std::uint32_t, std::uint32_t>> used;  // (first world, key)
  for (std::uint32_t k = 0; k < n_keys; ++k) {
    std::uint32_t f = first[k].load(std::memory_order_relaxed);
    if (f != UINT32_MAX) used.emplace_back(f, k);
  }
  std::sort(used.begin(), used.end());
  for (std::uint32_t i = 0; i < used.size(); ++i) newid[used[i].second] = i;
  n_blocks = static_cast<std::uint32_t>(used.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t w = 0; w < static_cast<std::int64_t>(n_worlds); ++w)
    out[w] = newid[key(static_cast<std::uint32_t>(w))];

  return PartitionRelation::adopt(std::move(out), n_blocks);
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel_enabled(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace serial {

void know_filter(const PartitionRelation& r, const WorldSet& sat, WorldSet& out) {
  const std::uint32_t n = r.n_worlds();
  std::vector<std::uint8_t> ok(r.n_blocks(), 1);
  for (std::uint32_t w = 0; w < n; ++w)
    if (!sat.test(w)) ok[r.block_of(w)] = 0;
  out = WorldSet(n);
  for (std::uint32_t w = 0; w < n; ++w)
    if (ok[r.block_of(w)]) out.set(w);
}

PartitionRelation split_blocks(const PartitionRelation& r, const WorldSet& s) {
  const std::uint32_t n = r.n_worlds();
  std::vector<std::uint32_t> out(n);
  std::vector<std::uint32_t> newid(2 * r.n_blocks(), UINT32_MAX);
  std::uint32_t n_blocks = 0;
  for (std::uint32_t w = 0; w < n; ++w) {
    std::uint32_t k = 2 * r.block_of(w) + (s.test(w) ? 1 : 0);
    if (newid[k] == UINT32_MAX) newid[k] = n_blocks++;
    out[w] = newid[k];
  }
  return PartitionRelation::adopt(std::move(out), n_blocks);
}

PartitionRelation merge_flip(const PartitionRelation& r, std::uint32_t prop) {
  const std::uint32_t n = r.n_worlds();
  const std::uint32_t bit = 1u << prop;
  assert(bit < n);
  UnionFind uf(r.n_blocks());
  for (std::uint32_t w = 0; w < n; ++w)
    if (!(w & bit)) uf.unite(r.block_of(w), r.block_of(w | bit));
  std::vector<std::uint32_t> out(n);
  std::vector<std::uint32_t> newid(r.n_blocks(), UINT32_MAX);
  std::uint32_t n_blocks = 0;
  for (std::uint32_t w = 0; w < n; ++w) {
    std::uint32_t root = uf.find(r.block_of(w));
    if (newid[root] == UINT32_MAX) newid[root] = n_blocks++;
    out[w] = newid[root];
  }
  return PartitionRelation::adopt(std::move(out), n_blocks);
}

}  // namespace serial

void know_filter(const PartitionRelation& r, const WorldSet& sat, WorldSet& out) {
  const std::uint32_t n = r.n_worlds();
  if (!use_parallel(n)) {
    serial::know_filter(r, sat, out);
    return;
  }
  std::vector<std::atomic<std::uint8_t>> ok(r.n_blocks());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(r.n_blocks()); ++b)
    ok[b].store(1, std::memory_order_relaxed);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t w = 0; w < static_cast<std::int64_t>(n); ++w)
    if (!sat.test(static_cast<std::uint32_t>(w)))
      ok[r.block_of(static_cast<std::uint32_t>(w))].store(0, std::memory_order_relaxed);

  out = WorldSet(n);
  auto words = out.words();
  const std::int64_t n_words = static_cast<std::int64_t>(words.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t wi = 0; wi < n_words; ++wi) {
    std::uint64_t word = 0;
    const std::uint32_t base = static_cast<std::uint32_t>(wi) * 64;
    const std::uint32_t hi = std::min<std::uint32_t>(64, n - base);
    for (std::uint32_t b = 0; b < hi; ++b)
      if (ok[r.block_of(base + b)].load(std::memory_order_relaxed))
        word |= 1ull << b;
    words[wi] = word;
  }
}

PartitionRelation split_blocks(const PartitionRelation& r, const WorldSet& s) {
  const std::uint32_t n = r.n_worlds();
  if (!use_parallel(n)) return serial::split_blocks(r, s);
  return canonicalize_bounded(
      n, 2 * r.n_blocks(),
      [&](std::uint32_t w) { return 2 * r.block_of(w) + (s.test(w) ? 1u : 0u); },
      /*parallel=*/true);
}

PartitionRelation merge_flip(const PartitionRelation& r, std::uint32_t prop) {
  const std::uint32_t n = r.n_worlds();
  const std::uint32_t bit = 1u << prop;
  assert(bit < n);
  if (!use_parallel(n)) return serial::merge_flip(r, prop);

  // Per-thread union-finds over the (small) block space, folded together,
  // then a parallel canonical relabel over the world space.
  UnionFind uf(r.n_blocks());
#ifdef _OPENMP
#pragma omp parallel
  {
    UnionFind local(r.n_blocks());
#pragma omp for schedule(static) nowait
    for (std::int64_t w = 0; w < static_cast<std::int64_t>(n); ++w) {
      if (w & bit) continue;
      local.unite(r.block_of(static_cast<std::uint32_t>(w)),
                  r.block_of(static_cast<std::uint32_t>(w) | bit));
    }
#pragma omp critical
    for (std::uint32_t b = 0; b < r.n_blocks(); ++b) uf.unite(b, local.find(b));
  }
#else
  for (std::uint32_t w = 0; w < n; ++w)
    if (!(w & bit)) uf.unite(r.block_of(w), r.block_of(w | bit));
#endif

  std::vector<std::uint32_t> root(r.n_blocks());
  for (std::uint32_t b = 0; b < r.n_blocks(); ++b) root[b] = uf.find(b);

  return canonicalize_bounded(
      n, r.n_blocks(), [&](std::uint32_t w) { return root[r.block_of(w)]; },
      /*parallel=*/true);
}

}  // namespace kepal::kern
