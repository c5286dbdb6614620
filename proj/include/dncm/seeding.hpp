#pragma once

#include <cstdint>

namespace dncm::seeding {

// SplitMix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed for a stream identified by `index` under `seed`; all randomness
// in the library descends from one user seed through this function.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

// Stream tags, so different consumers of one seed never collide.
enum class Stream : std::uint64_t {
    WeightInit = 1,
    Shuffle = 2,
    Split = 3,
    Trial = 4,
    SampleDraw = 5,
    Synthetic = 6,
    Permutation = 7,
};

constexpr std::uint64_t derive(std::uint64_t seed, Stream stream) {
    return derive(seed, static_cast<std::uint64_t>(stream) << 56);
}

}  // namespace dncm::seeding
