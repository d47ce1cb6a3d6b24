#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace fedns::rng {

// All randomness in the library flows through SplitMix64 run in counter mode:
// the i-th output of a stream keyed by `key` is mix64(key + i * kGamma).
// Sub-streams are derived from (seed, stream-id) pairs, so draws made by
// different workers or rounds are independent of execution order.

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic sub-stream key for (seed, stream). Nest calls to bind more
// than one id: derive(derive(seed, round), worker).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed + kGamma * (stream + 1));
}

class Counter {
public:
    explicit Counter(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix64(key_ + kGamma * ++n_); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1); never 0 or 1, safe under log().
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Rademacher sign.
    double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Gamma(alpha, 1) via Marsaglia-Tsang, with the usual boost for alpha < 1.
    double gamma(double alpha) {
        if (alpha < 1.0) {
            const double u = uniform_open();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / (3.0 * std::sqrt(d));
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform_open();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t n_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, Counter& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

// k distinct indices drawn uniformly from [0, n), returned ascending.
std::vector<int> sample_without_replacement(int k, int n, Counter& rng);

// Proportions on the simplex, Dirichlet(alpha * 1_m).
std::vector<double> dirichlet(int m, double alpha, Counter& rng);

}  // namespace fedns::rng
