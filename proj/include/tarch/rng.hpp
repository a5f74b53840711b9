#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace tarch {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// FNV-1a; std::hash is not stable across standard libraries.
inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/**
 * @brief Seeded, splittable random stream.
 *
 * A stream owns a 64-bit Mersenne twister seeded from a derived seed. Child
 * streams are derived from the seed alone (never from the engine state), so
 * `s.split("drift")` names the same sub-stream no matter how many draws the
 * parent has made. The same child label therefore gives common random numbers.
 *
 * A stream is not thread-safe; give each worker its own split.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(detail::splitmix64(seed)) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    [[nodiscard]] RandomStream split(std::string_view name) const {
        return RandomStream(detail::splitmix64(seed_ ^ detail::fnv1a(name)));
    }

    [[nodiscard]] RandomStream split(std::uint64_t index) const {
        return RandomStream(detail::splitmix64(detail::splitmix64(seed_) + index + 1));
    }

    /// Uniform on the open interval (0, 1).
    double uniform() {
        double u;
        do {
            u = std::generate_canonical<double, 53>(engine_);
        } while (u <= 0.0);
        return u;
    }

    double normal() { return normal_(engine_); }

    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() noexcept { return engine_; }

    /// Uniform direction on the unit sphere of dimension p.
    std::vector<double> sphere_point(std::size_t p) {
        std::vector<double> x(p);
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (auto& v : x) {
                v = normal();
                n2 += v * v;
            }
        } while (n2 == 0.0);
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& v : x) v *= inv;
        return x;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace tarch
