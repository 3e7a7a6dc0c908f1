#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace knng {

// Seeded RNG used wherever a seed appears in a parameter set. The engine is
// std::mt19937_64 (bit-exact by the standard); every mapping on top of it is
// hand-rolled because std::*_distribution output is implementation-defined,
// and golden values frozen in the tests must reproduce across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Independent substream for (seed, stream); used to give builders one
    // stream per division / tree / node so results do not depend on the
    // order in which the streams are consumed.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix(seed + 0x9e3779b97f4a7c15ull, stream));
    }

    std::uint64_t u64() { return engine_(); }

    // Uniform in [0, n). Lemire reduction, no modulo bias.
    std::uint32_t index(std::uint32_t n) {
        return static_cast<std::uint32_t>(
            (static_cast<unsigned __int128>(u64() >> 32) * n) >> 32);
    }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    float uniform_float(float lo, float hi) {
        return lo + static_cast<float>(uniform()) * (hi - lo);
    }

    // Standard normal via Box-Muller.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Fisher-Yates.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(static_cast<std::uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // `count` distinct ids from [0, n) \ {exclude}; count must be feasible.
    std::vector<std::uint32_t> sample_distinct(std::uint32_t n, std::uint32_t count,
                                               std::uint32_t exclude);

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline std::vector<std::uint32_t> Rng::sample_distinct(std::uint32_t n, std::uint32_t count,
                                                       std::uint32_t exclude) {
    std::vector<std::uint32_t> out;
    out.reserve(count);
    if (count * 2 >= n) {
        // Dense case: shuffle the full id range.
        std::vector<std::uint32_t> ids;
        ids.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i)
            if (i != exclude) ids.push_back(i);
        shuffle(ids);
        ids.resize(std::min<std::size_t>(count, ids.size()));
        return ids;
    }
    std::vector<bool> seen(n, false);
    while (out.size() < count) {
        std::uint32_t c = index(n);
        if (c == exclude || seen[c]) continue;
        seen[c] = true;
        out.push_back(c);
    }
    return out;
}

}  // namespace knng
