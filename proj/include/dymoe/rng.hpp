#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dymoe {

// Fowler-Noll-Vo 1a, 64-bit. std::hash is not stable across standard
// libraries, so streams are derived with an explicit hash instead.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t stream_key(std::uint64_t seed, std::string_view purpose) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
    std::uint64_t h = fnv1a64(std::string_view(buf, 8));
    return fnv1a64(purpose, h);
}

// All randomness in the project flows from one seed fanned out into named
// streams: rng_stream(seed, "synth.features") never collides with
// rng_stream(seed, "train.shuffle").
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view purpose) {
    return std::mt19937_64(stream_key(seed, purpose));
}

// Extra integer salts for per-epoch / per-node streams.
inline std::uint64_t stream_key(std::uint64_t seed, std::string_view purpose, std::uint64_t a,
                                std::uint64_t b = 0) {
    std::uint64_t h = stream_key(seed, purpose);
    h ^= 0x9e3779b97f4a7c15ULL + a + (h << 6) + (h >> 2);
    h ^= 0x9e3779b97f4a7c15ULL + b + (h << 6) + (h >> 2);
    return h;
}

inline std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view purpose,
                                  std::uint64_t a, std::uint64_t b = 0) {
    return std::mt19937_64(stream_key(seed, purpose, a, b));
}

}  // namespace dymoe
