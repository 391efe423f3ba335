#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wmmse_learn {

/// Deterministic random stream. The engine (std::mt19937_64) is bit-exact
/// across platforms by the ISO spec; the distributions are implemented here
/// because the std:: distribution objects are implementation-defined and the
/// dataset contracts require bit-identical output for a fixed seed.
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32)};
        engine_.seed(seq);
    }

    /// Substream for sample `index`: order-stable and independent of how
    /// samples are distributed over workers.
    rng_stream(std::uint64_t seed, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        engine_.seed(seq);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (second draw cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Standard normal conditioned on |z| <= 2 (rejection sampling).
    double truncated_normal() {
        double z;
        do {
            z = normal();
        } while (std::fabs(z) > 2.0);
        return z;
    }

    /// Rayleigh magnitude with E[x^2] = mean_square.
    double rayleigh(double mean_square) {
        double n1 = normal();
        double n2 = normal();
        return std::sqrt(mean_square / 2.0) * std::sqrt(n1 * n1 + n2 * n2);
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace wmmse_learn
