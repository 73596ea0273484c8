#pragma once

#include <cstdint>
#include <span>

#include "kepal/partition.hpp"
#include "kepal/worldset.hpp"

namespace kepal::kern {

/// Global switch for the OpenMP code paths. On by default when compiled
/// with OpenMP; kernels fall back to the serial reference below the size
/// threshold either way.
bool parallel_enabled();
void set_parallel_enabled(bool on);

/// Inputs smaller than this run serially even when parallelism is on.
inline constexpr std::uint32_t kParallelThreshold = 1u << 12;

/// out[w] = 1 iff the whole block of w lies inside `sat`. This is the inner
/// loop of the knowledge modality: a block is in or out as a unit.
void know_filter(const PartitionRelation& r, const WorldSet& sat, WorldSet& out);

/// Kernel behind split_by: relabel worlds by (old block, membership in s).
PartitionRelation split_blocks(const PartitionRelation& r, const WorldSet& s);

/// Kernel behind merge_on_prop: unite blocks of w and w xor (1<<prop).
PartitionRelation merge_flip(const PartitionRelation& r, std::uint32_t prop);

namespace serial {
/// Reference implementations, kept independent of the OpenMP paths and
/// used by the tests and the benchmark for comparison.
void know_filter(const PartitionRelation& r, const WorldSet& sat, WorldSet& out);
PartitionRelation split_blocks(const PartitionRelation& r, const WorldSet& s);
PartitionRelation merge_flip(const PartitionRelation& r, std::uint32_t prop);
}  // namespace serial

}  // namespace kepal::kern
