// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic, serializable RNG. We avoid <random> distributions because
// their output is implementation-defined; every draw here is pinned by this
// code, so checkpoints and manifests reproduce runs on any platform.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dgk/common.hpp"

namespace dgk {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// xoshiro256++ with splitmix64 seeding. State is four u64 words,
/// round-trips exactly through checkpoints.
class Rng {
public:
    using State = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) {
            w = splitmix64(sm);
        }
        gauss_cached_ = false;
    }

    /// Independent stream for worker/sample `index` of a master seed.
    static Rng split(std::uint64_t master_seed, std::uint64_t index) {
        std::uint64_t sm = master_seed;
        const std::uint64_t a = splitmix64(sm);
        sm = a ^ (index * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull);
        return Rng{splitmix64(sm)};
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl_(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl_(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n == 0) {
            return 0;
        }
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return x % n;
    }

    int uniform_int(int lo, int hi_inclusive) noexcept {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

    /// Standard normal via Box-Muller; the spare is cached.
    double normal() noexcept {
        if (gauss_cached_) {
            gauss_cached_ = false;
            return gauss_spare_;
        }
        const double u = 1.0 - uniform();  // (0, 1]
        const double r = std::sqrt(-2.0 * std::log(u));
        const double theta = 6.283185307179586476925286766559 * uniform();
        gauss_spare_ = r * std::sin(theta);
        gauss_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

    /// Normal truncated to |z| <= 2 by resampling (transformer init convention).
    double truncated_normal(double stddev) noexcept {
        double z = normal();
        while (std::fabs(z) > 2.0) {
            z = normal();
        }
        return z * stddev;
    }

    template <class T>
    void shuffle(std::vector<T>& v) noexcept {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Sample an index from unnormalized nonnegative weights.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            total += w;
        }
        DGK_REQUIRE(total > 0.0, "categorical: weights sum to zero");
        const double r = uniform() * total;
        double cum = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            cum += weights[i];
            if (r < cum) {
                return i;
            }
        }
        return weights.size() - 1;
    }

    State state() const noexcept { return s_; }
    void set_state(const State& s) noexcept {
        s_ = s;
        gauss_cached_ = false;
    }

private:
    static std::uint64_t rotl_(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    State s_{};
    bool gauss_cached_ = false;
    double gauss_spare_ = 0.0;
};

}  // namespace dgk
