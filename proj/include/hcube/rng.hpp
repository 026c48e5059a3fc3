#ifndef HCUBE_RNG_HPP
#define HCUBE_RNG_HPP

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace hcube {

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a, used to turn purpose names into stream tags.
constexpr std::uint64_t tag(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t streamKey(std::uint64_t seed, std::uint64_t purpose) {
    return mix64(seed ^ mix64(purpose));
}

// Counter-based draw: a pure function of (seed, purpose, index).
constexpr std::uint64_t drawAt(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
    return mix64(streamKey(seed, purpose) + mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr double toUnit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

constexpr double uniformAt(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
    return toUnit(drawAt(seed, purpose, index));
}

// Sequential stream over the counter generator. All derived distributions are
// implemented here so results do not depend on the standard library vendor.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream) : key_(streamKey(seed, stream)) {}
    Rng(std::uint64_t seed, std::string_view purpose) : Rng(seed, tag(purpose)) {}

    std::uint64_t next() { return mix64(key_ + mix64(counter_++ + 0x632be59bd9b4e019ULL)); }
    double uniform() { return toUnit(next()); }
    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }

    // Uniform integer in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    Rng split(std::uint64_t child) const { return Rng(key_, child, 0); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(below(v.size()))];
    }

private:
    Rng(std::uint64_t parent, std::uint64_t child, int) : key_(mix64(parent ^ mix64(child ^ 0x5851f42d4c957f2dULL))) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace hcube

#endif
