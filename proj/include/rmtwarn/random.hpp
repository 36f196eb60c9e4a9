// Portable, seed-reproducible random streams.
//
// The standard library's distribution objects are implementation-defined, so
// identical seeds can give different draws across toolchains. Everything here
// is specified bit-for-bit:
//
//   * seeds are mixed with SplitMix64 (Steele, Lea & Flood 2014);
//   * the engine is xoshiro256** (Blackman & Vigna 2018), state filled from
//     SplitMix64;
//   * uniforms take the top 53 bits of an output word;
//   * normals use the Marsaglia polar method, caching the second variate;
//   * Student t with `dof` degrees of freedom is Z / sqrt(chi2_dof / dof) with
//     chi2 built from `dof` squared normals (integer dof only).
//
// Independent streams are obtained with `derive_seed(seed, stream)`, so that a
// replicate k always sees the same numbers whether it runs serially or on a
// worker thread.

#pragma once

#include <array>
#include <cstdint>

namespace rmtwarn {

/// One SplitMix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for sub-stream `stream` of a root `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform on [0, 1).
    double uniform();
    /// Standard normal N(0, 1).
    double normal();
    /// Student t with integer degrees of freedom (variance dof/(dof-2) for dof > 2).
    double student_t(int dof);

private:
    std::array<std::uint64_t, 4> s_{};
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace rmtwarn
