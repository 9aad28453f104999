#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tlsim {

/// Engine for one named substream of the run seed. Substreams are keyed by
/// (seed, name, index) so any shard can be regenerated without touching others.
std::mt19937_64 substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

/// Uniform on [0, 1) from the top 53 bits; identical on every standard library.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (one variate per call, portable across toolchains).
double standard_normal(std::mt19937_64& rng);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace tlsim
