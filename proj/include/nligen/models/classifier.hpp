#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "nligen/data/example.hpp"
#include "nligen/layers/dense.hpp"
#include "nligen/layers/lstm.hpp"
#include "nligen/layers/mlstm.hpp"
#include "nligen/numerics/param_store.hpp"

namespace nligen {

struct ClassifierConfig {
    std::size_t hidden = 150;
    SequenceLimits limits;
};

using LabelProbs = std::array<double, kLabelCount>;

// Premise LSTM and hypothesis LSTM feed a match-LSTM; the last match state goes
// through a dense layer of size 3 and a softmax.
class Classifier {
public:
    // embeddings [V x e] are stored as a frozen entry.
    Classifier(const Tensor& embeddings, const ClassifierConfig& cfg, std::uint64_t seed);

    const ClassifierConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const Tensor& embeddings() const { return store_.value(emb_); }

    // Throws std::invalid_argument unless both sequences have the padded lengths.
    LabelProbs classify(std::span<const TokenId> premise, std::span<const TokenId> hypothesis) const;
    LabelProbs classify(const Example& ex) const { return classify(ex.premise, ex.hypothesis); }

    // Cross-entropy -log p(label).
    double loss(const Example& ex) const;
    // Same value; accumulates grad_scale * d(loss) into params().
    double loss_and_backward(const Example& ex, double grad_scale = 1.0);

private:
    // Gradients go to grads when non-null (the model's own store).
    double run(const Example& ex, ParamStore* grads, double grad_scale, LabelProbs* probs) const;
    void check_lengths(std::span<const TokenId> premise, std::span<const TokenId> hypothesis) const;

    ClassifierConfig cfg_;
    ParamStore store_;
    ParamId emb_ = 0;
    Lstm premise_lstm_, hypothesis_lstm_;
    MatchLstm match_;
    Dense out_;
};

std::size_t predicted_label(const LabelProbs& probs);

} // namespace nligen
