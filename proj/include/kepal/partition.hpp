#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "kepal/worldset.hpp"

namespace kepal {

/// An equivalence relation over the 2^|At| worlds, stored as a partition:
/// block_of[w] is the block id of world w. Block ids are canonical: blocks
/// are numbered by first-seen world id, ascending, so two partitions are
/// the same relation iff their block arrays are equal.
class PartitionRelation {
public:
  PartitionRelation() = default;

  /// One block per world (the identity relation).
  static PartitionRelation identity(std::uint32_t n_worlds);
  /// A single block (the full relation).
  static PartitionRelation single(std::uint32_t n_worlds);
  /// Worlds related iff they agree on the propositions in `mask`
  /// (bit k of mask = proposition k).
  static PartitionRelation agreement(std::uint32_t at_size, std::uint32_t mask);
  /// Canonicalizes arbitrary per-world keys into a partition.
  static PartitionRelation from_keys(std::span<const std::uint64_t> keys);

  std::uint32_t n_worlds() const { return static_cast<std::uint32_t>(block_of_.size()); }
  std::uint32_t n_blocks() const { return n_blocks_; }
  std::uint32_t block_of(World w) const { return block_of_[w]; }
  std::span<const std::uint32_t> blocks() const { return block_of_; }

  bool same_block(World a, World b) const { return block_of_[a] == block_of_[b]; }

  /// Worlds of the block containing w.
  WorldSet block_members(World w) const;

  bool operator==(const PartitionRelation& o) const = default;
  std::uint64_t hash() const {
    return fnv1a64(block_of_.data(), block_of_.size() * sizeof(std::uint32_t));
  }

  bool is_canonical() const;

  /// Internal: adopts a raw block array (must already be canonical).
  static PartitionRelation adopt(std::vector<std::uint32_t> block_of, std::uint32_t n_blocks);

private:
  std::vector<std::uint32_t> block_of_;
  std::uint32_t n_blocks_ = 0;
};

using RelPtr = std::shared_ptr<const PartitionRelation>;

/// Refines R by S: every block splits into its S-part and its non-S-part.
/// Exactly the pairs disagreeing on membership in S disappear.
PartitionRelation split_by(const PartitionRelation& r, const WorldSet& s);

/// Coarsens R by uniting, for every world Y, the blocks of Y and Y xor {p}:
/// the finest equivalence relation containing R and all such flip pairs.
PartitionRelation merge_on_prop(const PartitionRelation& r, std::uint32_t prop);

/// True iff every block of `fine` is contained in one block of `coarse`.
bool refines(const PartitionRelation& fine, const PartitionRelation& coarse);

}  // namespace kepal
