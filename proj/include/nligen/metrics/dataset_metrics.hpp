#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nligen/data/example.hpp"
#include "nligen/models/classifier.hpp"
#include "nligen/models/discriminator.hpp"
#include "nligen/models/generator.hpp"

namespace nligen {

struct LabelAccuracy {
    double overall = 0.0;
    std::array<double, kLabelCount> per_label{};        // 0 where a label is absent
    std::array<std::size_t, kLabelCount> label_counts{};
    std::size_t total = 0;
};

// Fraction of examples whose label equals the judge's argmax. Throws
// std::invalid_argument on an empty dataset.
LabelAccuracy dataset_label_accuracy(std::span<const Example> data, const Classifier& judge);

// Plain test accuracy against the gold labels (same computation as above).
inline double classifier_accuracy(std::span<const Example> data, const Classifier& clf) {
    return dataset_label_accuracy(data, clf).overall;
}

struct TextSimilarity {
    double jaccard = 0.0;
    double rouge_l = 0.0;
    double meteor = 0.0;
};

// Means over the set of premise-hypothesis Jaccard distance, and ROUGE-L and
// METEOR-lite of each hypothesis against its reference. reference may be
// empty, in which case only jaccard is filled. Throws std::invalid_argument
// on a size mismatch.
TextSimilarity mean_text_similarity(std::span<const Example> data, std::span<const Example> reference = {});

enum class LatentSource {
    Table,   // embed kinds: the learned row of the same index (training data)
    Sampled, // embed kinds: Z ~ N(0, sigma) with a fixed seed (unseen data)
};

// Mean over examples of the per-token negative log-likelihood of the gold
// hypothesis (terminal <null> counted). encdec uses the encoder's Z,
// vae-encdec uses Z = mu. Throws std::invalid_argument on empty data.
double mean_token_nll(const Generator& gen, std::span<const Example> data, LatentSource source = LatentSource::Sampled,
                      std::uint64_t seed = 0);

// Shuffles both sets with one seeded permutation, pairs them position by
// position and counts pairs where D(original) <= D(generated). Throws
// std::invalid_argument on a size mismatch or empty sets.
double discriminator_error_rate(const Discriminator& disc, std::span<const Example> original,
                                std::span<const Example> generated, std::uint64_t seed = 0);

// One row of a comparison report.
struct MetricRow {
    std::string dataset;   // e.g. "att-embed z=8"
    std::optional<std::string> model;
    std::optional<std::size_t> latent;
    std::optional<double> threshold;
    std::optional<double> accuracy_at_t;    // classifier trained on the filtered set, original test split
    std::optional<double> accuracy_generated_dev; // same classifier on its filtered generated dev set
    std::optional<LabelAccuracy> data_accuracy;
    std::optional<TextSimilarity> similarity;
    std::optional<double> nll;
    std::optional<double> discriminator_error;
    std::optional<std::size_t> size;
};

struct MetricReport {
    std::map<std::string, std::string> meta;
    std::vector<MetricRow> rows;

    std::string to_json(int indent = 2) const;
    static MetricReport from_json(const std::string& text);
    // Aligned columns: dataset, t, acc@t, acc-gen-dev, acc-data, nll/token,
    // disc-er, size.
    std::string to_table() const;
};

} // namespace nligen
