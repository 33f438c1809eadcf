#include "nligen/models/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nligen/models/common.hpp"
#include "nligen/numerics/ops.hpp"

namespace nligen {

Discriminator::Discriminator(const Tensor& embeddings, const DiscriminatorConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
    emb_ = store_.add("embeddings", embeddings.dims(), UpdateMode::Frozen);
    store_.value(emb_) = embeddings;
    lstm_ = Lstm(store_, "lstm", embeddings.cols(), cfg.hidden);
    out_ = Dense(store_, "out", cfg.hidden, 1);
    Rng rng(seed);
    lstm_.initialize(store_, rng);
    out_.initialize(store_, rng);
}

double Discriminator::logit(std::span<const TokenId> hypothesis, Lstm::SequenceCache* cache, Vec* last_h) const {
    if (hypothesis.size() != cfg_.hypothesis_length) {
        throw std::invalid_argument("Discriminator: expected padded length " + std::to_string(cfg_.hypothesis_length) +
                                    ", got " + std::to_string(hypothesis.size()));
    }
    const auto xs = embed_tokens(store_.value(emb_), hypothesis);
    const auto hs = lstm_.forward(store_, xs, LstmState::zeros(cfg_.hidden), cache);
    if (last_h) *last_h = hs.back().h;
    return out_.forward(store_, hs.back().h)[0];
}

double Discriminator::score(std::span<const TokenId> hypothesis) const { return sigmoid(logit(hypothesis, nullptr, nullptr)); }

namespace {

double clamp_score(double s) { return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp); }

} // namespace

double Discriminator::loss(std::span<const TokenId> original, std::span<const TokenId> generated) const {
    const double so = clamp_score(score(original));
    const double sg = clamp_score(score(generated));
    return -(std::log(so) + std::log(1.0 - sg));
}

void Discriminator::backward(const Lstm::SequenceCache& cache, const Vec& last_h, double dlogit) {
    Vec dy(1);
    dy[0] = dlogit;
    std::vector<Vec> dh(cache.steps.size(), Vec::Zero(static_cast<Eigen::Index>(cfg_.hidden)));
    dh.back() = out_.backward(store_, last_h, dy);
    lstm_.backward(store_, cache, dh);
}

double Discriminator::loss_and_backward(std::span<const TokenId> original, std::span<const TokenId> generated,
                                        double grad_scale) {
    Lstm::SequenceCache co, cg;
    Vec ho, hg;
    const double lo = logit(original, &co, &ho);
    const double lg = logit(generated, &cg, &hg);
    const double so = sigmoid(lo);
    const double sg = sigmoid(lg);
    // d/dl of -log s(l) is s - 1; of -log(1 - s(l)) is s. Zero where clamped.
    const bool clamp_o = so < kScoreClamp || so > 1.0 - kScoreClamp;
    const bool clamp_g = sg < kScoreClamp || sg > 1.0 - kScoreClamp;
    backward(co, ho, clamp_o ? 0.0 : grad_scale * (so - 1.0));
    backward(cg, hg, clamp_g ? 0.0 : grad_scale * sg);
    return -(std::log(clamp_score(so)) + std::log(1.0 - clamp_score(sg)));
}

} // namespace nligen
