#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

#include "kepal/util.hpp"

namespace kepal {

/// A world is a truth assignment over the proposition universe, identified
/// by the integer whose bit k is the value of proposition k.
using World = std::uint32_t;

/// Dense bit-vector over world ids (also reused as a set of graph states).
class WorldSet {
public:
  WorldSet() = default;
  explicit WorldSet(std::uint32_t n_bits, bool fill = false)
      : n_(n_bits), w_((n_bits + 63) / 64, fill ? ~0ull : 0ull) {
    trim();
  }

  static WorldSet full(std::uint32_t n) { return WorldSet(n, true); }

  std::uint32_t size() const { return n_; }

  bool test(std::uint32_t i) const {
    assert(i < n_);
    return (w_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(std::uint32_t i, bool v = true) {
    assert(i < n_);
    if (v)
      w_[i >> 6] |= 1ull << (i & 63);
    else
      w_[i >> 6] &= ~(1ull << (i & 63));
  }

  WorldSet& operator&=(const WorldSet& o) {
    assert(n_ == o.n_);
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
    return *this;
  }
  WorldSet& operator|=(const WorldSet& o) {
    assert(n_ == o.n_);
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
    return *this;
  }
  WorldSet& subtract(const WorldSet& o) {
    assert(n_ == o.n_);
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i];
    return *this;
  }
  void complement() {
    for (auto& x : w_) x = ~x;
    trim();
  }

  friend WorldSet operator&(WorldSet a, const WorldSet& b) { return a &= b; }
  friend WorldSet operator|(WorldSet a, const WorldSet& b) { return a |= b; }
  friend WorldSet operator~(WorldSet a) {
    a.complement();
    return a;
  }

  bool subset_of(const WorldSet& o) const {
    assert(n_ == o.n_);
    for (std::size_t i = 0; i < w_.size(); ++i)
      if (w_[i] & ~o.w_[i]) return false;
    return true;
  }

  bool any() const {
    for (auto x : w_)
      if (x) return true;
    return false;
  }
  bool none() const { return !any(); }

  std::uint32_t count() const {
    std::uint32_t c = 0;
    for (auto x : w_) c += static_cast<std::uint32_t>(__builtin_popcountll(x));
    return c;
  }

  bool operator==(const WorldSet& o) const = default;

  std::span<const std::uint64_t> words() const { return w_; }
  std::span<std::uint64_t> words() { return w_; }

  std::uint64_t hash() const { return fnv1a64(w_.data(), w_.size() * 8); }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t wi = 0; wi < w_.size(); ++wi) {
      std::uint64_t x = w_[wi];
      while (x) {
        unsigned b = static_cast<unsigned>(__builtin_ctzll(x));
        f(static_cast<std::uint32_t>(wi * 64 + b));
        x &= x - 1;
      }
    }
  }

private:
  void trim() {
    if (n_ % 64 && !w_.empty()) w_.back() &= (~0ull) >> (64 - n_ % 64);
  }

  std::uint32_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace kepal
