#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tensorstick {

// Bad user input (malformed files, out-of-domain parameters). CLI exit 2.
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric failure during sampling (NaN state, divergent chain). CLI exit 3.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant. CLI exit 4.
class invariant_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// 64-bit FNV-1a over raw bytes.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 1469598103934665603ull) {
  return fnv1a64(s.data(), s.size(), h);
}

// SplitMix64 finalizer; used to derive independent RNG substreams from a
// master seed. Documented in the README so runs are reproducible by hand.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Short %.17g rendering: round-trips doubles exactly and is byte-stable,
// which the determinism contract on persisted artifacts relies on.
std::string fmt_g17(double x);

std::string hex_u64(std::uint64_t v);

}  // namespace tensorstick
