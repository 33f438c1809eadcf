#include "nligen/pipeline/dataset_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nligen/data/vocab.hpp"
#include "nligen/numerics/parallel.hpp"
#include "nligen/numerics/random.hpp"

namespace nligen {

Dataset generate_dataset(const Generator& gen, const Dataset& source, const GenerateOptions& opts) {
    if (!(opts.oversample >= 1.0) || !std::isfinite(opts.oversample))
        throw std::invalid_argument("generate_dataset: oversample must be >= 1");
    opts.generation.validate();
    Dataset out;
    out.vocab_hash = source.vocab_hash;
    const std::size_t n = source.size();
    const auto passes = static_cast<std::size_t>(std::ceil(opts.oversample));
    out.examples.resize(n * passes);
    parallel_for(out.examples.size(), opts.workers, [&](std::size_t j) {
        Rng rng(derive_seed(opts.generation.seed, "generate", j));
        Example ex = generate_for_example(gen, source.examples[j % n], opts.generation, rng);
        ex.origin_index = j % n;
        out.examples[j] = std::move(ex);
    });
    return out;
}

std::vector<double> judge_label_probs(const Classifier& judge, std::span<const Example> data, std::size_t workers) {
    std::vector<double> probs(data.size());
    parallel_for(data.size(), workers,
                 [&](std::size_t i) { probs[i] = judge.classify(data[i])[label_index(data[i].label)]; });
    return probs;
}

FilterResult filter_by_probs(const Dataset& data, std::span<const double> probs, double t) {
    if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("filter threshold must be in [0, 1), got " + std::to_string(t));
    if (probs.size() != data.size())
        throw std::invalid_argument("filter: " + std::to_string(probs.size()) + " probabilities for " +
                                    std::to_string(data.size()) + " examples");
    FilterResult r;
    r.kept.vocab_hash = data.vocab_hash;
    r.label_probs.assign(probs.begin(), probs.end());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (probs[i] > t) {
            r.kept.examples.push_back(data.examples[i]);
            r.kept_indices.push_back(i);
        }
    }
    return r;
}

FilterResult filter_dataset(const Dataset& data, const Classifier& judge, double t, std::size_t workers) {
    const auto probs = judge_label_probs(judge, data.examples, workers);
    return filter_by_probs(data, probs, t);
}

namespace {

std::array<std::size_t, kLabelCount> label_counts(const Dataset& data) {
    std::array<std::size_t, kLabelCount> c{};
    for (const Example& ex : data.examples) ++c[label_index(ex.label)];
    return c;
}

} // namespace

std::size_t balanced_capacity(const Dataset& data) {
    const auto c = label_counts(data);
    return kLabelCount * *std::min_element(c.begin(), c.end());
}

Dataset balance_and_trim(const Dataset& data, std::size_t target) {
    const std::size_t per = target / kLabelCount;
    const auto counts = label_counts(data);
    for (Label l : kAllLabels) {
        if (counts[label_index(l)] < per) {
            throw std::runtime_error("balance_and_trim: need " + std::to_string(per) + " examples per label, have " +
                                     "entailment=" + std::to_string(counts[0]) +
                                     " contradiction=" + std::to_string(counts[1]) +
                                     " neutral=" + std::to_string(counts[2]));
        }
    }
    Dataset out;
    out.vocab_hash = data.vocab_hash;
    std::array<std::size_t, kLabelCount> taken{};
    for (const Example& ex : data.examples) {
        std::size_t& t = taken[label_index(ex.label)];
        if (t < per) {
            ++t;
            out.examples.push_back(ex);
        }
    }
    return out;
}

Dataset merge_datasets(const Dataset& a, const Dataset& b) {
    if (!a.empty() && !b.empty() && a.vocab_hash != b.vocab_hash) {
        throw std::invalid_argument("merge_datasets: vocabulary hashes differ (" + hash_hex(a.vocab_hash) + " vs " +
                                    hash_hex(b.vocab_hash) + ")");
    }
    Dataset out;
    out.vocab_hash = a.empty() ? b.vocab_hash : a.vocab_hash;
    out.examples.reserve(a.size() + b.size());
    out.examples.insert(out.examples.end(), a.examples.begin(), a.examples.end());
    out.examples.insert(out.examples.end(), b.examples.begin(), b.examples.end());
    return out;
}

} // namespace nligen
