#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace tsvad {

// Error categories used across the library. The CLI maps them to exit codes
// (invalid argument / format -> 2, numeric / state -> 3, undefined metric -> 4).
struct InvalidArgumentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UndefinedMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArchSpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Seeded generator with fully specified output mapping. std::mt19937_64 itself
// is defined bit-for-bit by the standard; the distributions are not, so the
// uniform mappings live here to keep artifacts byte-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw InvalidArgumentError("uniform_int: n must be positive");
        // rejection sampling keeps the draw unbiased and deterministic
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller on the deterministic uniform mapping
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace tsvad
