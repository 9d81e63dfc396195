#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace metasum {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Stage seeds are a fixed function of the master seed and a stage label.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label)
{
    return splitmix64(master ^ fnv1a64(label));
}

/// Counter-based seed for the i-th independent work item below a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter)
{
    return splitmix64(splitmix64(master) + counter);
}

// Thin wrapper over mt19937_64. The std distributions are implementation-defined,
// so the conversions are written out to keep streams identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n)
    {
        // Lemire-style rejection keeps the draw unbiased.
        const std::uint64_t limit = -n % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r < limit);
        return r % n;
    }

    bool coin(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace metasum
