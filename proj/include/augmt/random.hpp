#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace augmt {

// std::mt19937_64 output is fully specified by the standard; the distributions in <random>
// are not, so bounded integers and unit reals are derived here to keep seeded runs
// reproducible across standard libraries.
using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent engine for substream `index` of `seed`.
inline Engine substream(std::uint64_t seed, std::uint64_t index) {
    return Engine(splitmix64(seed ^ splitmix64(index + 1)));
}

inline double unit_real(Engine &eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, bound) by rejection.
inline std::uint64_t bounded(Engine &eng, std::uint64_t bound) {
    if (bound <= 1)
        return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = eng();
    } while (x >= limit);
    return x % bound;
}

template <typename T>
void shuffle(std::span<T> items, Engine &eng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(bounded(eng, i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

/// Selection sampling: `n` distinct indices of [0, total), ascending.
inline std::vector<std::size_t> sample_indices(std::size_t total, std::size_t n, Engine &eng) {
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < total && out.size() < n; ++i) {
        const std::size_t remaining = total - i;
        const std::size_t needed = n - out.size();
        if (bounded(eng, remaining) < needed)
            out.push_back(i);
    }
    return out;
}

} // namespace augmt
