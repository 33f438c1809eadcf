#pragma once

#include <cstdint>
#include <span>

#include "nligen/data/example.hpp"
#include "nligen/layers/dense.hpp"
#include "nligen/layers/lstm.hpp"
#include "nligen/numerics/param_store.hpp"

namespace nligen {

struct DiscriminatorConfig {
    std::size_t hidden = 150;
    std::size_t hypothesis_length = 15;
};

inline constexpr double kScoreClamp = 1e-12;

// D(X) = sigmoid(Dense_1(LSTM(X))) over a padded hypothesis; D estimates the
// probability that X is an original (human) hypothesis.
class Discriminator {
public:
    Discriminator(const Tensor& embeddings, const DiscriminatorConfig& cfg, std::uint64_t seed);

    const DiscriminatorConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    double score(std::span<const TokenId> hypothesis) const;

    // -[log D(original) + log(1 - D(generated))], scores clamped to
    // [1e-12, 1 - 1e-12] before the log.
    double loss(std::span<const TokenId> original, std::span<const TokenId> generated) const;
    double loss_and_backward(std::span<const TokenId> original, std::span<const TokenId> generated,
                             double grad_scale = 1.0);

private:
    // Gradient of the loss wrt the pre-sigmoid logit is dlogit.
    double logit(std::span<const TokenId> hypothesis, Lstm::SequenceCache* cache, Vec* last_h) const;
    void backward(const Lstm::SequenceCache& cache, const Vec& last_h, double dlogit);

    DiscriminatorConfig cfg_;
    ParamStore store_;
    ParamId emb_ = 0;
    Lstm lstm_;
    Dense out_;
};

} // namespace nligen
