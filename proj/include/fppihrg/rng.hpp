#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace fppihrg {

// Counter-based splitmix64 stream. One instance per replication; streams for
// distinct (master, label, index) triples are derived independently, which is
// what makes results independent of worker count and scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1]  (safe as a log argument)
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // (0, 1)  (safe as an argument of log(-log(.)))
    double uniform_open() { return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52; }

    // Unbiased integer in [0, n). Lemire multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t floor = (0 - n) % n;
            while (lo < floor) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double exponential() { return -std::log(uniform_pos()); }
    double exponential(double rate) {
        if (rate <= 0.0) throw std::invalid_argument("Rng::exponential: rate must be positive");
        return exponential() / rate;
    }

    double gumbel() { return -std::log(-std::log(uniform_open())); }

private:
    std::uint64_t state_;
};

// Stateless splitmix64 finalizer; used for seed derivation only.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Deterministic sub-stream seed for (master, label, index). Derivation is pure
// arithmetic on the triple, so any replication can be regenerated in isolation.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
    const std::uint64_t h = mix64(master ^ fnv1a64(label));
    return mix64(h ^ (0x9E3779B97F4A7C15ull * (index + 1)));
}

// Poisson quantile by CDF walk; valid for mean up to ~37 (leading pmf term
// stays inside double range).
inline std::int64_t poisson_inverse_cdf(double u, double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson_inverse_cdf: mean must be nonnegative");
    if (mean == 0.0) return 0;
    double pmf = std::exp(-mean);
    double cdf = pmf;
    std::int64_t k = 0;
    const std::int64_t cap = static_cast<std::int64_t>(mean + 40.0 * std::sqrt(mean) + 60.0);
    while (u >= cdf && k < cap) {
        ++k;
        pmf *= mean / static_cast<double>(k);
        cdf += pmf;
    }
    return k;
}

// Binomial quantile by CDF walk; intended for the sparse regime trials*p = O(1).
inline std::int64_t binomial_inverse_cdf(double u, std::int64_t trials, double p) {
    if (trials < 0) throw std::invalid_argument("binomial_inverse_cdf: trials must be nonnegative");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("binomial_inverse_cdf: p must lie in [0,1]");
    if (trials == 0 || p == 0.0) return 0;
    if (p == 1.0) return trials;
    const double odds = p / (1.0 - p);
    double pmf = std::exp(static_cast<double>(trials) * std::log1p(-p));
    double cdf = pmf;
    std::int64_t k = 0;
    while (u >= cdf && k < trials) {
        pmf *= odds * static_cast<double>(trials - k) / static_cast<double>(k + 1);
        ++k;
        cdf += pmf;
    }
    return k;
}

// Mean is split in half above 30 to keep the leading pmf term away from
// underflow.
inline std::int64_t sample_poisson(Rng& rng, double mean) {
    if (mean < 0.0) throw std::invalid_argument("sample_poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    if (mean > 30.0) return sample_poisson(rng, mean / 2) + sample_poisson(rng, mean - mean / 2);
    return poisson_inverse_cdf(rng.uniform(), mean);
}

inline std::int64_t sample_binomial(Rng& rng, std::int64_t trials, double p) {
    if (trials < 0) throw std::invalid_argument("sample_binomial: trials must be nonnegative");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_binomial: p must lie in [0,1]");
    if (trials == 0 || p == 0.0) return 0;
    if (p == 1.0) return trials;
    return binomial_inverse_cdf(rng.uniform(), trials, p);
}

template <typename T>
void shuffle(Rng& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace fppihrg
