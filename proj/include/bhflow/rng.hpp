#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bhflow {

// Hand-rolled Box-Muller on top of mt19937_64, bit-stable across standard
// library implementations (std::normal_distribution is not).
struct GaussianRng {
    std::mt19937_64 rng;
    bool has_spare = false;
    double spare = 0.0;

    explicit GaussianRng(uint64_t seed) : rng(seed) {}

    double uniform() { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53; }
    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u = uniform(), v = uniform();
        double m = std::sqrt(-2.0 * std::log(u));
        spare = m * std::sin(2.0 * M_PI * v);
        has_spare = true;
        return m * std::cos(2.0 * M_PI * v);
    }
};

// Deterministic Fisher-Yates shuffle (std::shuffle is implementation-defined).
template <class Vec>
void deterministic_shuffle(Vec& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace bhflow
