#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nligen {

using TokenId = std::uint32_t;
using TokenIds = std::vector<TokenId>;

inline constexpr TokenId kNullId = 0;
inline constexpr TokenId kOovId = 1;
inline constexpr std::size_t kLabelCount = 3;

enum class Label : std::uint8_t { Entailment = 0, Contradiction = 1, Neutral = 2 };

inline constexpr std::array<Label, kLabelCount> kAllLabels = {Label::Entailment, Label::Contradiction, Label::Neutral};

std::string_view to_string(Label label);
// Throws std::invalid_argument on anything other than the three label names.
Label label_from_string(std::string_view name);
inline std::size_t label_index(Label label) { return static_cast<std::size_t>(label); }
std::array<double, kLabelCount> one_hot(Label label);

struct SequenceLimits {
    std::size_t premise = 25;
    std::size_t hypothesis = 15;

    friend bool operator==(const SequenceLimits&, const SequenceLimits&) = default;
};

// Padded example. origin_index and gen_logprob are set only on generated data.
struct Example {
    TokenIds premise;
    TokenIds hypothesis;
    Label label = Label::Entailment;
    std::optional<std::size_t> origin_index;
    std::optional<double> gen_logprob;

    friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
    std::vector<Example> examples;
    std::uint64_t vocab_hash = 0;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

// Count of tokens before the first padding id.
std::size_t unpadded_length(std::span<const TokenId> ids);
std::span<const TokenId> strip_padding(std::span<const TokenId> ids);
// Throws std::length_error if ids is longer than length.
TokenIds pad_to(TokenIds ids, std::size_t length);
// Throws std::invalid_argument if lengths differ from the limits or padding
// appears before a real token.
void validate_example(const Example& ex, const SequenceLimits& limits);

} // namespace nligen
