#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace dsec {

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for a named sub-stream of `seed` (FNV-1a of the tag mixed with the seed).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;

/// Deterministic random source: std::mt19937_64 seeded with splitmix64(seed).
///
/// Uniform and normal variates are produced by this class rather than the
/// <random> distributions, whose algorithms are implementation-defined, so a
/// seed yields the same stream with any standard library.
///  - uniform(): top 53 bits of one engine draw, in [0, 1).
///  - normal():  Box–Muller on two uniforms; the second variate is cached.
///  - index(n):  modulo reduction with rejection of the biased low range.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t index(std::size_t n);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Independent generator for a named sub-stream of this generator's seed.
    Rng derive(std::string_view tag) const { return Rng(derive_seed(seed_, tag)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

} // namespace dsec
