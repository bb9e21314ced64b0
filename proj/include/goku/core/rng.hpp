#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace goku {

// splitmix64 finalizer; full-period bijective mix.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t v) {
    return mix64(seed ^ (mix64(v) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

// Labeled sub-stream derivation: a single master seed fans out into
// independent streams for datasets, weight init, batching, noise, ...
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return combine_seed(base, h);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                    std::uint64_t index) {
    return combine_seed(derive_seed(base, label), index);
}

inline double u64_to_unit(std::uint64_t x) {
    // 53 uniform bits -> [0, 1)
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Counter-based standard normal keyed by (seed, step, dim). Stateless, so
// parallel and serial evaluation orders produce identical streams.
inline double normal_at(std::uint64_t seed, std::uint64_t step, std::uint64_t dim) {
    std::uint64_t k = combine_seed(combine_seed(seed, step), dim);
    std::uint64_t a = mix64(k);
    std::uint64_t b = mix64(k + 0x632be59bd9b4e019ULL);
    double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double u2 = u64_to_unit(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Sequential RNG with distributions pinned to the mt19937_64 bit stream
// (std::uniform_real_distribution is implementation-defined, so we map the
// raw bits ourselves to keep datasets byte-reproducible across platforms).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    double uniform() { return u64_to_unit(eng_()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; consumes two draws per pair, caches the spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    // Uniform integer in [0, n) by rejection; unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace goku
