#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pairtrees {

// Seeded random stream. The engine (mt19937_64) has a fully specified output
// sequence; all distribution mappings are hand-rolled here so that a given
// seed produces the same draws on every platform and standard library.
//
// Substreams are derived by hashing (seed, tag, index) with splitmix64, so a
// stream for tree t never depends on how many trees precede it.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static uint64_t derive(uint64_t seed, uint64_t tag, uint64_t index = 0) {
        return mix(mix(seed ^ 0x853c49e6748fea9bULL) ^ mix(tag) ^ index);
    }

    uint64_t next() { return eng_(); }

    // Uniform over [0, n), n >= 1. Rejection sampling keeps it unbiased.
    size_t index(size_t n) {
        uint64_t un = n;
        uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return static_cast<size_t>(v % un);
    }

    // Uniform over [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform over the open interval (lo, hi); never returns an endpoint, so
    // a threshold routing x < t always sends at least one sample each way.
    // If no double lies strictly between lo and hi, returns hi itself, which
    // still separates lo-valued samples from hi-valued ones under x < t.
    double open_interval(double lo, double hi) {
        if (!(std::nextafter(lo, hi) < hi)) return hi;
        double t;
        do {
            double u = uniform01();
            t = lo * (1.0 - u) + hi * u;
        } while (!(t > lo && t < hi));
        return t;
    }

    // Standard normal via Box-Muller (one value per call, spare discarded).
    double normal() {
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace pairtrees
