#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace demfuse {

/// SplitMix64 (Steele, Lea & Flood 2014) with fixed derivations of uniform
/// and normal variates, so fixtures are reproducible across platforms and
/// languages. The standard library distributions are implementation-defined
/// and are deliberately not used anywhere in the toolkit.
///
///   next():    state += 0x9E3779B97F4A7C15
///              z = state
///              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///              return z ^ (z >> 31)
///   uniform(): (next() >> 11) * 2^-53                      in [0, 1)
///   normal():  u1 = 1 - uniform(), u2 = uniform()
///              sqrt(-2 ln u1) * cos(2 pi u2)              (one draw per call)
///   below(n):  next() % n
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t below(std::uint64_t n) { return next() % n; }

    /// Fisher-Yates, last element first.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return next(); }

private:
    std::uint64_t state_;
};

}  // namespace demfuse
