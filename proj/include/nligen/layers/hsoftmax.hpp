#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "nligen/numerics/param_store.hpp"
#include "nligen/numerics/random.hpp"

namespace nligen {

// Two-level class-factored softmax over a vocabulary of size V:
//   p(w | h) = p(class(w) | h) * p(w | class(w), h)
// Words are assigned to contiguous blocks of ceil(V / ceil(sqrt(V))) ids, so a
// frequency-sorted vocabulary yields frequency-banded classes. Word-level
// parameters are RowSparse: a single-token loss touches the class layer and
// the rows of the target's block only.
class HierarchicalSoftmax {
public:
    HierarchicalSoftmax() = default;
    HierarchicalSoftmax(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t vocab_size);

    std::size_t input_size() const { return input_; }
    std::size_t vocab_size() const { return vocab_; }
    std::size_t class_count() const { return classes_; }
    std::size_t block_size() const { return block_; }
    std::size_t class_of(std::size_t word) const { return word / block_; }
    // Half-open vocab id range of a class.
    std::pair<std::size_t, std::size_t> class_range(std::size_t cls) const;

    ParamId class_weights_id() const { return class_w_; }
    ParamId class_bias_id() const { return class_b_; }
    ParamId word_weights_id() const { return word_w_; }
    ParamId word_bias_id() const { return word_b_; }

    void initialize(ParamStore& store, Rng& rng) const;

    Vec distribution(const ParamStore& store, const Vec& h) const;
    Vec log_distribution(const ParamStore& store, const Vec& h) const;
    double log_prob(const ParamStore& store, const Vec& h, std::size_t target) const;

    // Returns -log p(target | h); accumulates grad_scale * d(-log p) into the
    // store and writes the input gradient (scaled likewise) into dh.
    double nll_backward(ParamStore& store, const Vec& h, std::size_t target, double grad_scale, Vec& dh) const;

private:
    void check(const Vec& h) const;
    void check_target(std::size_t target) const;

    std::size_t input_ = 0, vocab_ = 0, classes_ = 0, block_ = 0;
    ParamId class_w_ = 0, class_b_ = 0, word_w_ = 0, word_b_ = 0;
};

} // namespace nligen
