#pragma once

// Counter-based deterministic RNG. One master seed is expanded into
// independent per-purpose streams via label hashing, so reordering one
// consumer never shifts another's draws.

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace arta {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_label(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = seed ^ 0x51'7C'C1'B7'27'22'0A'95ull;
    for (char c : label) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001B3ull;
        h ^= h >> 29;
    }
    return h;
}

}  // namespace detail

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds (0, 1, 2, ...)
        detail::splitmix64(state_);
    }

    // Independent child stream; safe to create in any order.
    Rng split(std::string_view label) const { return Rng(detail::hash_label(state_, label)); }

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        // modulo bias is irrelevant for n << 2^64
        return next_u64() % n;
    }

    // standard normal via Box-Muller (second value discarded to keep the
    // stream stateless apart from the counter)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

  private:
    std::uint64_t state_;
};

// Fisher-Yates over an index vector; the canonical shuffle for batches.
template <typename T>
inline void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace arta
