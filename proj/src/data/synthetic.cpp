#include "nligen/data/synthetic.hpp"

#include <array>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include "nligen/numerics/random.hpp"

namespace nligen {

namespace {

constexpr std::array<const char*, 6> kNouns = {"man", "woman", "boy", "girl", "dog", "cat"};
// Two values per slot, so a conflicting value is always the opposite one.
constexpr std::array<const char*, 2> kSizes = {"big", "small"};
constexpr std::array<const char*, 2> kColors = {"black", "white"};
constexpr std::array<const char*, 2> kActions = {"runs", "sits"};
constexpr std::array<const char*, 2> kPlaces = {"park", "house"};

enum Slot { kSize = 0, kColor = 1, kAction = 2, kPlace = 3, kSlotCount = 4 };

constexpr std::array<std::size_t, kSlotCount> kSlotValues = {kSizes.size(), kColors.size(), kActions.size(),
                                                            kPlaces.size()};

// Value index per slot, -1 when absent.
struct Scene {
    std::size_t noun = 0;
    std::array<int, kSlotCount> slots{-1, -1, -1, -1};
};

std::vector<std::string> render(const Scene& s) {
    std::vector<std::string> out{"a"};
    if (s.slots[kSize] >= 0) out.emplace_back(kSizes[static_cast<std::size_t>(s.slots[kSize])]);
    if (s.slots[kColor] >= 0) out.emplace_back(kColors[static_cast<std::size_t>(s.slots[kColor])]);
    out.emplace_back(kNouns[s.noun]);
    if (s.slots[kAction] >= 0) out.emplace_back(kActions[static_cast<std::size_t>(s.slots[kAction])]);
    if (s.slots[kPlace] >= 0) {
        out.emplace_back("in");
        out.emplace_back("the");
        out.emplace_back(kPlaces[static_cast<std::size_t>(s.slots[kPlace])]);
    }
    out.emplace_back(".");
    return out;
}

int other_value(int current, std::size_t slot, Rng& rng) {
    const auto n = kSlotValues[slot];
    const auto shift = 1 + rng.below(n - 1);
    return static_cast<int>((static_cast<std::size_t>(current) + shift) % n);
}

// Copies each premise slot into the hypothesis with probability 1/2.
Scene consistent_subset(const Scene& premise, Rng& rng) {
    Scene h;
    h.noun = premise.noun;
    for (std::size_t s = 0; s < kSlotCount; ++s) {
        if (premise.slots[s] >= 0 && rng.uniform() < 0.5) h.slots[s] = premise.slots[s];
    }
    return h;
}

} // namespace

std::vector<TextExample> make_attribute_corpus(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TextExample> out;
    out.reserve(count);
    while (out.size() < count) {
        const Label label = kAllLabels[out.size() % kLabelCount];
        Scene premise;
        premise.noun = rng.below(kNouns.size());
        premise.slots[kAction] = static_cast<int>(rng.below(kActions.size()));
        for (std::size_t s : {kSize, kColor, kPlace}) {
            if (rng.uniform() < 0.6) premise.slots[s] = static_cast<int>(rng.below(kSlotValues[s]));
        }

        Scene hyp = consistent_subset(premise, rng);
        std::vector<std::size_t> candidates;
        if (label == Label::Contradiction) {
            for (std::size_t s = 0; s < kSlotCount; ++s) {
                if (premise.slots[s] >= 0) candidates.push_back(s);
            }
            const std::size_t s = candidates[rng.below(candidates.size())];
            hyp.slots[s] = other_value(premise.slots[s], s, rng);
        } else if (label == Label::Neutral) {
            for (std::size_t s = 0; s < kSlotCount; ++s) {
                if (premise.slots[s] < 0) candidates.push_back(s);
            }
            if (candidates.empty()) continue;
            const std::size_t s = candidates[rng.below(candidates.size())];
            hyp.slots[s] = static_cast<int>(rng.below(kSlotValues[s]));
        }

        TextExample ex;
        ex.premise = render(premise);
        ex.hypothesis = render(hyp);
        ex.label = label;
        out.push_back(std::move(ex));
    }
    return out;
}

void write_unit_vectors(const std::filesystem::path& path, const std::vector<TextExample>& examples,
                        std::uint64_t seed, std::size_t dim) {
    std::set<std::string> words;
    for (const auto& ex : examples) {
        words.insert(ex.premise.begin(), ex.premise.end());
        words.insert(ex.hypothesis.begin(), ex.hypothesis.end());
    }
    Rng rng(derive_seed(seed, "vectors"));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.precision(6);
    out << std::fixed;
    for (const auto& w : words) {
        out << w;
        for (std::size_t i = 0; i < dim; ++i) out << ' ' << rng.normal();
        out << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

} // namespace nligen
