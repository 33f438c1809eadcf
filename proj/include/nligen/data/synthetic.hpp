#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nligen/data/corpus.hpp"

namespace nligen {

// Rule-generated NLI corpus over a small attribute world. A premise describes
// one subject with an action and a random subset of {size, color, place}; each
// slot has two opposite values.
// Hypotheses restate the subject and a subset of slots:
//   entailment     every stated slot agrees with the premise
//   contradiction  one slot the premise states gets a different value
//   neutral        one slot the premise leaves open gets a value
// Labels are balanced (cycled in order). The world has 18 words.
std::vector<TextExample> make_attribute_corpus(std::size_t count, std::uint64_t seed);

// Writes "word v1 ... vdim" lines of N(0, 1) vectors for every word of the
// examples, sorted. Stands in for a pretrained vector file on toy data.
void write_unit_vectors(const std::filesystem::path& path, const std::vector<TextExample>& examples,
                        std::uint64_t seed, std::size_t dim = 50);

} // namespace nligen
