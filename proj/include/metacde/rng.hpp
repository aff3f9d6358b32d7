#pragma once

#include <cstdint>
#include <random>

namespace metacde {

// splitmix64 finalizer; decorrelates nearby seeds before they feed mt19937_64.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent deterministic stream for (base, stream, index); streams identify
// purposes (init, fakes, eval tasks, ...) so different uses of one base seed
// never share a generator state.
inline std::mt19937_64 seeded_rng(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) {
  return std::mt19937_64(mix64(base ^ mix64(stream ^ mix64(index))));
}

namespace rng_stream {
constexpr std::uint64_t init = 1;
constexpr std::uint64_t fakes = 2;
constexpr std::uint64_t eval_tasks = 3;
constexpr std::uint64_t misc = 4;
}  // namespace rng_stream

}  // namespace metacde
