#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "nligen/data/example.hpp"
#include "nligen/data/vocab.hpp"
#include "nligen/numerics/tensor.hpp"

namespace nligen {

struct TextExample {
    std::vector<std::string> premise;
    std::vector<std::string> hypothesis;
    Label label = Label::Entailment;
    std::optional<std::size_t> origin_index;
    std::optional<double> gen_logprob;
};

struct CorpusStats {
    std::size_t lines = 0;      // non-blank input lines
    std::size_t unlabeled = 0;  // gold_label "-"
    std::size_t too_long = 0;   // over the premise/hypothesis limits
    std::size_t kept = 0;

    double retention() const { return lines ? static_cast<double>(kept) / static_cast<double>(lines) : 0.0; }
    // Fraction kept among the examples that carry a consensus label.
    double retention_of_labeled() const {
        const std::size_t labeled = lines - unlabeled;
        return labeled ? static_cast<double>(kept) / static_cast<double>(labeled) : 0.0;
    }
};

struct LoadedCorpus {
    std::vector<TextExample> examples;
    CorpusStats stats;
};

// Reads SNLI-style JSONL ({"gold_label", "sentence1", "sentence2"} plus the
// optional generated-data fields "origin_index" and "gen_logprob"). Drops "-"
// labels and over-length examples. Throws std::runtime_error naming the line
// on malformed input or an unknown label.
LoadedCorpus parse_corpus(std::istream& in, const SequenceLimits& limits, const std::string& source = "<stream>");
LoadedCorpus load_corpus(const std::filesystem::path& path, const SequenceLimits& limits = {});

// All premise and hypothesis token lists, for vocabulary building.
std::vector<std::vector<std::string>> corpus_sentences(const std::vector<TextExample>& examples);

Example encode_example(const TextExample& ex, const Vocab& vocab, const SequenceLimits& limits);
Dataset encode_corpus(const std::vector<TextExample>& examples, const Vocab& vocab, const SequenceLimits& limits);
Dataset load_dataset(const std::filesystem::path& path, const Vocab& vocab, const SequenceLimits& limits = {},
                     CorpusStats* stats = nullptr);

std::string example_to_json_line(const Example& ex, const Vocab& vocab);
void write_dataset(const std::filesystem::path& path, const Dataset& data, const Vocab& vocab);

// Pretrained vectors in "word v1 ... v_dim" text format. Rows of words missing
// from the file are drawn from N(0, 0.1) with the given seed; row 0 (<null>)
// is zero. Throws naming the word if a vector has the wrong length.
Tensor load_embeddings(const std::filesystem::path& path, const Vocab& vocab, std::uint64_t seed,
                       std::size_t dim = 50);
Tensor random_embeddings(const Vocab& vocab, std::uint64_t seed, std::size_t dim = 50);

inline constexpr double kUnknownEmbeddingStd = 0.1;

} // namespace nligen
