#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace elplug {

/// What a derived stream is used for. Part of the stream key so that, for
/// example, the bootstrap resamples inside replicate i never share a stream
/// with the data generator of replicate i.
enum class StreamPurpose : std::uint64_t {
  Data = 1,
  Bootstrap = 2,
  Quantile = 3,
  Study = 4,
};

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: hashes the key path into one 64-bit seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t key : path) h = splitmix64(h ^ splitmix64(key + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_stream(std::uint64_t master, std::uint64_t replicate, StreamPurpose purpose,
                          std::uint64_t sub = 0) {
  const std::uint64_t key = derive_seed(master, {replicate, static_cast<std::uint64_t>(purpose), sub});
  std::seed_seq seq{static_cast<std::uint32_t>(key & 0xffffffffULL), static_cast<std::uint32_t>(key >> 32)};
  return Engine(seq);
}

}  // namespace elplug
