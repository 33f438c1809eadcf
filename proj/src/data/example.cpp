#include "nligen/data/example.hpp"

#include <algorithm>
#include <stdexcept>

namespace nligen {

std::string_view to_string(Label label) {
    switch (label) {
    case Label::Entailment: return "entailment";
    case Label::Contradiction: return "contradiction";
    case Label::Neutral: return "neutral";
    }
    throw std::invalid_argument("invalid label value");
}

Label label_from_string(std::string_view name) {
    if (name == "entailment") return Label::Entailment;
    if (name == "contradiction") return Label::Contradiction;
    if (name == "neutral") return Label::Neutral;
    throw std::invalid_argument("unknown label: '" + std::string(name) + "'");
}

std::array<double, kLabelCount> one_hot(Label label) {
    std::array<double, kLabelCount> v{};
    v[label_index(label)] = 1.0;
    return v;
}

std::size_t unpadded_length(std::span<const TokenId> ids) {
    return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), kNullId) - ids.begin());
}

std::span<const TokenId> strip_padding(std::span<const TokenId> ids) { return ids.first(unpadded_length(ids)); }

TokenIds pad_to(TokenIds ids, std::size_t length) {
    if (ids.size() > length) {
        throw std::length_error("sequence of " + std::to_string(ids.size()) + " tokens exceeds " +
                                std::to_string(length));
    }
    ids.resize(length, kNullId);
    return ids;
}

namespace {

void validate_sequence(std::span<const TokenId> ids, std::size_t length, const char* what) {
    if (ids.size() != length) {
        throw std::invalid_argument(std::string(what) + " has length " + std::to_string(ids.size()) + ", expected " +
                                    std::to_string(length));
    }
    const std::size_t real = unpadded_length(ids);
    if (std::any_of(ids.begin() + static_cast<std::ptrdiff_t>(real), ids.end(),
                    [](TokenId t) { return t != kNullId; })) {
        throw std::invalid_argument(std::string(what) + " has padding before a real token");
    }
}

} // namespace

void validate_example(const Example& ex, const SequenceLimits& limits) {
    validate_sequence(ex.premise, limits.premise, "premise");
    validate_sequence(ex.hypothesis, limits.hypothesis, "hypothesis");
}

} // namespace nligen
