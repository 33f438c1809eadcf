#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nligen/data/example.hpp"
#include "nligen/generation/decode.hpp"
#include "nligen/models/classifier.hpp"
#include "nligen/models/generator.hpp"

namespace nligen {

struct GenerateOptions {
    GenerationConfig generation;
    double oversample = 1.0; // >= 1; the source is cycled ceil(oversample) times
    std::size_t workers = 1;
};

// Output item j comes from source[j % n] in pass j / n, with Z drawn from its
// own stream derive_seed(seed, "generate", j); origin_index is the source
// position. The result does not depend on the worker count.
Dataset generate_dataset(const Generator& gen, const Dataset& source, const GenerateOptions& opts);

struct FilterResult {
    Dataset kept;
    std::vector<double> label_probs;       // judge probability of each input's label
    std::vector<std::size_t> kept_indices; // into the input
};

// Judge probability of each example's own label.
std::vector<double> judge_label_probs(const Classifier& judge, std::span<const Example> data, std::size_t workers = 1);

// Keeps examples whose label probability is strictly above t. Throws
// std::invalid_argument unless 0 <= t < 1 and probs matches the data size.
FilterResult filter_by_probs(const Dataset& data, std::span<const double> probs, double t);
FilterResult filter_dataset(const Dataset& data, const Classifier& judge, double t, std::size_t workers = 1);

// Rounds target down to a multiple of 3 and keeps the first target/3 examples
// of each label, in the original relative order. Throws std::runtime_error
// with the label counts if a label has fewer.
Dataset balance_and_trim(const Dataset& data, std::size_t target);

// Largest balanced size available: 3 * min label count.
std::size_t balanced_capacity(const Dataset& data);

// a followed by b. Throws std::invalid_argument if both are non-empty and
// their vocabulary hashes differ.
Dataset merge_datasets(const Dataset& a, const Dataset& b);

} // namespace nligen
