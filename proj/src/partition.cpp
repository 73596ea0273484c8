#include "kepal/partition.hpp"

#include <cassert>
#include <unordered_map>

#include "kepal/kern.hpp"

namespace kepal {

PartitionRelation PartitionRelation::identity(std::uint32_t n_worlds) {
  std::vector<std::uint32_t> b(n_worlds);
  for (std::uint32_t w = 0; w < n_worlds; ++w) b[w] = w;
  return adopt(std::move(b), n_worlds);
}

PartitionRelation PartitionRelation::single(std::uint32_t n_worlds) {
  return adopt(std::vector<std::uint32_t>(n_worlds, 0), n_worlds ? 1 : 0);
}

PartitionRelation PartitionRelation::agreement(std::uint32_t at_size, std::uint32_t mask) {
  const std::uint32_t n = 1u << at_size;
  std::vector<std::uint64_t> keys(n);
  for (std::uint32_t w = 0; w < n; ++w) keys[w] = w & mask;
  return from_keys(keys);
}

PartitionRelation PartitionRelation::from_keys(std::span<const std::uint64_t> keys) {
  std::vector<std::uint32_t> b(keys.size());
  std::unordered_map<std::uint64_t, std::uint32_t> ids;
  ids.reserve(keys.size() / 4 + 8);
  std::uint32_t next = 0;
  for (std::size_t w = 0; w < keys.size(); ++w) {
    auto [it, fresh] = ids.try_emplace(keys[w], next);
    if (fresh) ++next;
    b[w] = it->second;
  }
  return adopt(std::move(b), next);
}

PartitionRelation PartitionRelation::adopt(std::vector<std::uint32_t> block_of,
                                           std::uint32_t n_blocks) {
  PartitionRelation r;
  r.block_of_ = std::move(block_of);
  r.n_blocks_ = n_blocks;
  assert(r.is_canonical());
  return r;
}

WorldSet PartitionRelation::block_members(World w) const {
  WorldSet s(n_worlds());
  const std::uint32_t b = block_of_[w];
  for (std::uint32_t v = 0; v < n_worlds(); ++v)
    if (block_of_[v] == b) s.set(v);
  return s;
}

bool PartitionRelation::is_canonical() const {
  std::uint32_t seen = 0;
  for (std::uint32_t w = 0; w < block_of_.size(); ++w) {
    std::uint32_t b = block_of_[w];
    if (b > seen || b >= n_blocks_) return false;
    if (b == seen) ++seen;
  }
  return seen == n_blocks_;
}

PartitionRelation split_by(const PartitionRelation& r, const WorldSet& s) {
  assert(r.n_worlds() == s.size());
  return kern::split_blocks(r, s);
}

PartitionRelation merge_on_prop(const PartitionRelation& r, std::uint32_t prop) {
  return kern::merge_flip(r, prop);
}

bool refines(const PartitionRelation& fine, const PartitionRelation& coarse) {
  assert(fine.n_worlds() == coarse.n_worlds());
  // Block of `fine` -> block of `coarse`; any conflict breaks containment.
  std::vector<std::uint32_t> image(fine.n_blocks(), UINT32_MAX);
  for (std::uint32_t w = 0; w < fine.n_worlds(); ++w) {
    std::uint32_t fb = fine.block_of(w);
    std::uint32_t cb = coarse.block_of(w);
    if (image[fb] == UINT32_MAX)
      image[fb] = cb;
    else if (image[fb] != cb)
      return false;
  }
  return true;
}

}  // namespace kepal
