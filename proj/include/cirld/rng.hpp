#pragma once

#include <cstdint>
#include <cmath>

namespace cirld {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based uniform stream. The state is (key, counter); draw k of the
// stream keyed by (seed, path) is a pure function of those three integers, so
// ensembles reproduce bit-identically no matter how paths are scheduled.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL))) {}

    // Uniform on (0, 1): never returns 0, safe under log().
    double uniform() {
        const std::uint64_t bits = mix64(key_ + (ctr_++) * 0x9e3779b97f4a7c15ULL);
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    // One standard normal via Box-Muller (cosine branch); consumes exactly
    // two uniforms so the stream position stays predictable.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

}  // namespace cirld
