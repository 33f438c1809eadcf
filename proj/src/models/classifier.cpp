#include "nligen/models/classifier.hpp"

#include <cmath>
#include <stdexcept>

#include "nligen/models/common.hpp"
#include "nligen/numerics/ops.hpp"

namespace nligen {

Classifier::Classifier(const Tensor& embeddings, const ClassifierConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (embeddings.rank() != 2) throw std::invalid_argument("Classifier: embeddings must be a matrix");
    const std::size_t e = embeddings.cols();
    const std::size_t d = cfg.hidden;
    emb_ = store_.add("embeddings", embeddings.dims(), UpdateMode::Frozen);
    store_.value(emb_) = embeddings;
    premise_lstm_ = Lstm(store_, "premise_lstm", e, d);
    hypothesis_lstm_ = Lstm(store_, "hypothesis_lstm", e, d);
    match_ = MatchLstm(store_, "mlstm", d);
    out_ = Dense(store_, "out", d, kLabelCount);

    Rng rng(seed);
    premise_lstm_.initialize(store_, rng);
    hypothesis_lstm_.initialize(store_, rng);
    match_.initialize(store_, rng);
    out_.initialize(store_, rng);
}

void Classifier::check_lengths(std::span<const TokenId> premise, std::span<const TokenId> hypothesis) const {
    if (premise.size() != cfg_.limits.premise || hypothesis.size() != cfg_.limits.hypothesis) {
        throw std::invalid_argument("Classifier: expected padded lengths " + std::to_string(cfg_.limits.premise) +
                                    "/" + std::to_string(cfg_.limits.hypothesis) + ", got " +
                                    std::to_string(premise.size()) + "/" + std::to_string(hypothesis.size()));
    }
}

double Classifier::run(const Example& ex, ParamStore* grads, double grad_scale, LabelProbs* probs) const {
    const bool backward = grads != nullptr;
    check_lengths(ex.premise, ex.hypothesis);
    const std::size_t d = cfg_.hidden;
    const Tensor& emb = store_.value(emb_);
    const auto xp = embed_tokens(emb, ex.premise);
    const auto xh = embed_tokens(emb, ex.hypothesis);

    Lstm::SequenceCache pc, hc;
    MatchLstm::Cache mc;
    const auto hp = premise_lstm_.forward(store_, xp, LstmState::zeros(d), backward ? &pc : nullptr);
    const auto hh = hypothesis_lstm_.forward(store_, xh, LstmState::zeros(d), backward ? &hc : nullptr);
    std::vector<Vec> hp_out, hh_out;
    hp_out.reserve(hp.size());
    hh_out.reserve(hh.size());
    for (const auto& s : hp) hp_out.push_back(s.h);
    for (const auto& s : hh) hh_out.push_back(s.h);
    const auto hm = match_.forward(store_, hp_out, hh_out, Vec::Zero(static_cast<Eigen::Index>(d)),
                                   backward ? &mc : nullptr);

    const Vec& last = hm.back().h;
    const Vec logits = out_.forward(store_, last);
    const Vec p = softmax(as_span(logits));
    const auto target = static_cast<Eigen::Index>(label_index(ex.label));
    const double loss = -std::log(std::max(p[target], 1e-300));
    if (probs) {
        for (std::size_t i = 0; i < kLabelCount; ++i) (*probs)[i] = p[static_cast<Eigen::Index>(i)];
    }
    if (!backward) return loss;

    Vec d_logits = p * grad_scale;
    d_logits[target] -= grad_scale;
    std::vector<Vec> d_hm(hm.size(), Vec::Zero(static_cast<Eigen::Index>(d)));
    d_hm.back() = out_.backward(*grads, last, d_logits);
    const auto mg = match_.backward(*grads, mc, d_hm);
    premise_lstm_.backward(*grads, pc, mg.d_premise);
    hypothesis_lstm_.backward(*grads, hc, mg.d_hypothesis);
    return loss;
}

LabelProbs Classifier::classify(std::span<const TokenId> premise, std::span<const TokenId> hypothesis) const {
    check_lengths(premise, hypothesis);
    Example ex;
    ex.premise.assign(premise.begin(), premise.end());
    ex.hypothesis.assign(hypothesis.begin(), hypothesis.end());
    LabelProbs probs{};
    run(ex, nullptr, 0.0, &probs);
    return probs;
}

double Classifier::loss(const Example& ex) const { return run(ex, nullptr, 0.0, nullptr); }

double Classifier::loss_and_backward(const Example& ex, double grad_scale) { return run(ex, &store_, grad_scale, nullptr); }

std::size_t predicted_label(const LabelProbs& probs) { return argmax(probs); }

} // namespace nligen
