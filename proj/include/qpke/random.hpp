#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

#include "qpke/angles.hpp"

namespace qpke {

/// SplitMix64 finalizer. Used for seed expansion and as the stateless PRF
/// behind reference-slot selection, so both endpoints (and the tests) can
/// recompute a selection from (seed, index) alone.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combines a seed with a position/tag into a fresh 64-bit value.
inline constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
    return splitmix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

/// Stateless PRF over a pulse index: uniform 64-bit output per (seed, index).
inline constexpr std::uint64_t prf64(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index * 0xd1342543de82ef95ULL + 1));
}

/// Deterministic random stream. The engine is std::mt19937_64 (identical
/// sequence on every platform); all distributions are sampled here from raw
/// 64-bit draws so that runs are reproducible bit-for-bit regardless of the
/// standard library's own distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform angle in the canonical range (-pi, pi].
    double uniform_phase() { return kPi - kTwoPi * uniform01(); }

    /// Uniform integer in [0, n). Rejection keeps the draw unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_int: n must be > 0");
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// Zero-mean Gaussian draw (Marsaglia polar method, spare cached).
    double normal(double sigma) {
        if (sigma <= 0.0) return 0.0;
        if (has_spare_) {
            has_spare_ = false;
            return spare_ * sigma;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f * sigma;
    }

    /// Poisson draw. Knuth's product method below lambda = 10, Hormann's
    /// transformed rejection (PTRD) above; both are exact samplers.
    std::uint64_t poisson(double lambda) {
        if (lambda < 0.0) throw std::invalid_argument("poisson: lambda must be >= 0");
        if (lambda == 0.0) return 0;
        if (lambda < 10.0) {
            const double exp_neg = std::exp(-lambda);
            std::uint64_t k = 0;
            double prod = uniform01();
            while (prod > exp_neg) {
                ++k;
                prod *= uniform01();
            }
            return k;
        }
        const double log_rate = std::log(lambda);
        const double b = 0.931 + 2.53 * std::sqrt(lambda);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        while (true) {
            const double u = uniform01() - 0.5;
            const double v = uniform01();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
            if (kf < 0.0) continue;
            if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
            if (us < 0.013 && v > us) continue;
            const double s = std::log(v * inv_alpha / (a / (us * us) + b));
            const double t = -lambda + kf * log_rate - std::lgamma(kf + 1.0);
            if (s <= t) return static_cast<std::uint64_t>(kf);
        }
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent stream seed from a master seed and a tag path,
/// e.g. derive_seed(master, {kStreamChannel, replication}).
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) s = hash_combine(s, p);
    return s;
}

// Stream tags for the per-session RNG forest.
enum StreamTag : std::uint64_t {
    kStreamRandomizer = 1,
    kStreamAliceKeys = 2,
    kStreamChannel = 3,
    kStreamBobDetector = 4,
    kStreamAttacker = 5,
    kStreamReferenceList = 6,
    kStreamAttackerGuess = 7,
    kStreamJitter = 8,
};

}  // namespace qpke
