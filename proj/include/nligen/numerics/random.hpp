#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace nligen {

// Seeded generator used for every random draw in the library. The normal and
// uniform draws are computed here from raw 64-bit output so a given seed
// produces the same stream on every standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();                 // [0, 1)
    double normal();                  // N(0, 1), Box-Muller without caching
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    std::size_t below(std::size_t n); // uniform integer in [0, n)

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = below(i);
            using std::swap;
            swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Named sub-seed: stable mixing of a base seed with a label and index.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index = 0);

std::uint64_t fnv1a64(std::string_view bytes);

} // namespace nligen
