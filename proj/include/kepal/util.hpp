#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kepal {

/// Error raised for malformed specifications, formulas, or ill-sorted
/// runtime values. Carries a source position when one is known (1-based;
/// line 0 means "no position").
class SpecError : public std::runtime_error {
public:
  explicit SpecError(std::string msg, int line = 0, int col = 0)
      : std::runtime_error(std::move(msg)), line(line), col(col) {}

  int line = 0;
  int col = 0;

  std::string formatted(std::string_view file = "") const {
    std::string out;
    if (!file.empty()) out += std::string(file) + ":";
    if (line > 0) out += std::to_string(line) + ":" + std::to_string(col) + ": ";
    else if (!out.empty()) out += " ";
    out += what();
    return out;
  }
};

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
  return fnv1a64(&v, sizeof v, h);
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace kepal
