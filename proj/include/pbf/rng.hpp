#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pbf {

/// Deterministic random stream. Identical seeds give identical sequences on
/// a given toolchain; substreams are derived by hashing (seed, tag) so that
/// independent consumers never share state.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    /// Child stream for a named purpose ("truth", "clutter", ...).
    [[nodiscard]] RngStream substream(std::string_view tag) const;
    [[nodiscard]] RngStream substream(std::uint64_t index) const;

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double uniform01() { return uniform(0.0, 1.0); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<std::uint64_t>(mean)(engine_);
    }
    bool bernoulli(double p) { return uniform01() < p; }

    std::mt19937_64& engine() { return engine_; }

    /// splitmix64 finalizer.
    static std::uint64_t mix(std::uint64_t x);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace pbf
