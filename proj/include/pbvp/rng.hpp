#pragma once

#include <cstdint>
#include <random>

namespace pbvp {

/// Reproducible random stream identified by (seed, stream_id).
///
/// Monte Carlo drivers give every path its own stream (stream_id = path
/// index), so results do not depend on how paths are split across workers.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Uniform on [0, 1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    /// Exp(rate) variate.
    double exponential(double rate = 1.0) {
        return std::exponential_distribution<double>(rate)(engine_);
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        return std::normal_distribution<double>(mean, sd)(engine_);
    }

    int binomial(int trials, double p) {
        return std::binomial_distribution<int>(trials, p)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    static std::uint64_t splitmix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
        return std::mt19937_64(splitmix(splitmix(seed) ^ stream));
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

} // namespace pbvp
