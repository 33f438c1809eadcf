#include "nligen/models/generator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nligen/models/common.hpp"
#include "nligen/numerics/ops.hpp"

namespace nligen {

std::string_view to_string(GeneratorKind kind) {
    switch (kind) {
    case GeneratorKind::AttEmbed: return "att-embed";
    case GeneratorKind::BaseEmbed: return "base-embed";
    case GeneratorKind::EncDec: return "encdec";
    case GeneratorKind::VaeEncDec: return "vae-encdec";
    }
    throw std::invalid_argument("invalid generator kind");
}

GeneratorKind generator_kind_from_string(std::string_view name) {
    if (name == "att-embed") return GeneratorKind::AttEmbed;
    if (name == "base-embed") return GeneratorKind::BaseEmbed;
    if (name == "encdec") return GeneratorKind::EncDec;
    if (name == "vae-encdec") return GeneratorKind::VaeEncDec;
    throw std::invalid_argument("unknown generator kind '" + std::string(name) +
                                "' (expected att-embed, base-embed, encdec or vae-encdec)");
}

struct Generator::EncoderCache {
    Lstm::SequenceCache premise, hypothesis;
    MatchLstm::Cache match;
    std::size_t steps = 0;
    Vec label;
};

Generator::Generator(const Tensor& embeddings, const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (embeddings.rank() != 2) throw std::invalid_argument("Generator: embeddings must be a matrix");
    if (cfg.latent == 0) throw std::invalid_argument("Generator: latent dimension must be positive");
    if (cfg.hidden == 0) throw std::invalid_argument("Generator: hidden size must be positive");
    if (uses_latent_table(cfg.kind) && cfg.table_rows == 0) {
        throw std::invalid_argument("Generator: embed kinds need the training-set size for the latent table");
    }
    const std::size_t e = embeddings.cols();
    const std::size_t v = embeddings.rows();
    const std::size_t d = cfg.hidden;
    const std::size_t z = cfg.latent;
    const std::size_t l = kLabelCount;

    emb_ = store_.add("embeddings", embeddings.dims(), UpdateMode::Frozen);
    store_.value(emb_) = embeddings;
    sigma_ = store_.add("latent_sigma", {z}, UpdateMode::Frozen);
    store_.value(sigma_).fill(-1.0);
    if (uses_latent_table(cfg.kind)) table_ = store_.add("latent", {cfg.table_rows, z}, UpdateMode::RowSparse);

    dec_premise_ = Lstm(store_, "dec.premise_lstm", e, d);
    if (attention_decoder()) {
        dec_hypothesis_ = Lstm(store_, "dec.hypothesis_lstm", e, d);
        dec_match_ = MatchLstm(store_, "dec.mlstm", d);
        dec_c0_ = Dense(store_, "dec.c0", z + l, d);
    } else {
        const std::size_t dd = cfg.decoder_size();
        dec_c0_ = Dense(store_, "dec.c0", z + l + d, dd);
        dec_hypothesis_ = Lstm(store_, "dec.lstm", e, dd);
    }
    out_ = HierarchicalSoftmax(store_, "dec.out", cfg.decoder_size(), v);

    if (uses_encoder(cfg.kind)) {
        enc_premise_ = Lstm(store_, "enc.premise_lstm", e, d);
        enc_hypothesis_ = Lstm(store_, "enc.hypothesis_lstm", e, d);
        enc_match_ = MatchLstm(store_, "enc.mlstm", d);
        enc_c0_ = Dense(store_, "enc.c0", l, d);
        enc_z_ = Dense(store_, "enc.z", d, z);
        if (cfg.kind == GeneratorKind::VaeEncDec) enc_logvar_ = Dense(store_, "enc.z_logvar", d, z);
    }

    Rng rng(seed);
    dec_premise_.initialize(store_, rng);
    dec_hypothesis_.initialize(store_, rng);
    if (attention_decoder()) dec_match_.initialize(store_, rng);
    dec_c0_.initialize(store_, rng);
    out_.initialize(store_, rng);
    if (uses_encoder(cfg.kind)) {
        enc_premise_.initialize(store_, rng);
        enc_hypothesis_.initialize(store_, rng);
        enc_match_.initialize(store_, rng);
        enc_c0_.initialize(store_, rng);
        enc_z_.initialize(store_, rng);
        if (cfg.kind == GeneratorKind::VaeEncDec) enc_logvar_.initialize(store_, rng);
    }
    if (table_) {
        for (double& x : store_.value(*table_).values()) x = rng.normal(0.0, kLatentInitStd);
    }
}

ParamId Generator::latent_table_id() const {
    if (!table_) throw std::logic_error("Generator: " + std::string(to_string(cfg_.kind)) + " has no latent table");
    return *table_;
}

void Generator::check_example(const Example& ex) const {
    if (ex.premise.size() != cfg_.limits.premise || ex.hypothesis.size() != cfg_.limits.hypothesis) {
        throw std::invalid_argument("Generator: expected padded lengths " + std::to_string(cfg_.limits.premise) + "/" +
                                    std::to_string(cfg_.limits.hypothesis) + ", got " +
                                    std::to_string(ex.premise.size()) + "/" + std::to_string(ex.hypothesis.size()));
    }
}

void Generator::check_latent(const Vec& z) const {
    if (static_cast<std::size_t>(z.size()) != cfg_.latent) {
        throw std::invalid_argument("Generator: latent vector has size " + std::to_string(z.size()) + ", expected " +
                                    std::to_string(cfg_.latent));
    }
}

Vec Generator::table_row(std::size_t index) const {
    const Tensor& t = store_.value(latent_table_id());
    if (index >= t.rows()) {
        throw std::out_of_range("Generator: example index " + std::to_string(index) + " outside latent table of " +
                                std::to_string(t.rows()) + " rows");
    }
    return Eigen::Map<const Vec>(t.row(index).data(), static_cast<Eigen::Index>(cfg_.latent));
}

double Generator::decoder_run(const Example& ex, const Vec& z, ParamStore* grads, double grad_scale, Vec* dz,
                              std::size_t* tokens) const {
    const bool backward = grads != nullptr;
    const std::size_t d = cfg_.hidden;
    const Tensor& emb = store_.value(emb_);
    const Vec label = label_vector(ex.label);

    const std::size_t real = unpadded_length(ex.hypothesis);
    TokenIds inputs{kNullId};
    TokenIds targets;
    for (std::size_t k = 0; k < real; ++k) {
        inputs.push_back(ex.hypothesis[k]);
        targets.push_back(ex.hypothesis[k]);
    }
    targets.push_back(kNullId);
    if (tokens) *tokens = targets.size();

    const auto xp = embed_tokens(emb, ex.premise);
    const auto xh = embed_tokens(emb, inputs);
    Lstm::SequenceCache premise_cache, hyp_cache;
    const auto hp = dec_premise_.forward(store_, xp, LstmState::zeros(d), backward ? &premise_cache : nullptr);

    double nll = 0.0;
    const std::size_t steps = targets.size();
    std::vector<Vec> d_out(steps);

    if (attention_decoder()) {
        const Vec c0_in = concat({&z, &label});
        const Vec c0 = dec_c0_.forward(store_, c0_in);
        const auto hh = dec_hypothesis_.forward(store_, xh, LstmState::zeros(d), backward ? &hyp_cache : nullptr);
        std::vector<Vec> hp_out, hh_out;
        for (const auto& s : hp) hp_out.push_back(s.h);
        for (const auto& s : hh) hh_out.push_back(s.h);
        MatchLstm::Cache match_cache;
        const auto hm = dec_match_.forward(store_, hp_out, hh_out, c0, backward ? &match_cache : nullptr);
        for (std::size_t k = 0; k < steps; ++k) {
            if (backward) {
                nll += out_.nll_backward(*grads, hm[k].h, targets[k], grad_scale, d_out[k]);
            } else {
                nll -= out_.log_prob(store_, hm[k].h, targets[k]);
            }
        }
        if (!backward) return nll;
        const auto mg = dec_match_.backward(*grads, match_cache, d_out);
        dec_hypothesis_.backward(*grads, hyp_cache, mg.d_hypothesis);
        dec_premise_.backward(*grads, premise_cache, mg.d_premise);
        const Vec d_in = dec_c0_.backward(*grads, c0_in, mg.d_c0);
        if (dz) *dz = d_in.head(static_cast<Eigen::Index>(cfg_.latent));
        return nll;
    }

    const Vec& hp_last = hp.back().h;
    const Vec c0_in = concat({&z, &label, &hp_last});
    const Vec c0 = dec_c0_.forward(store_, c0_in);
    const std::size_t dd = cfg_.decoder_size();
    const LstmState init{Vec::Zero(static_cast<Eigen::Index>(dd)), c0};
    const auto hs = dec_hypothesis_.forward(store_, xh, init, backward ? &hyp_cache : nullptr);
    for (std::size_t k = 0; k < steps; ++k) {
        if (backward) {
            nll += out_.nll_backward(*grads, hs[k].h, targets[k], grad_scale, d_out[k]);
        } else {
            nll -= out_.log_prob(store_, hs[k].h, targets[k]);
        }
    }
    if (!backward) return nll;
    const auto g = dec_hypothesis_.backward(*grads, hyp_cache, d_out);
    const Vec d_in = dec_c0_.backward(*grads, c0_in, g.d_init.c);
    std::vector<Vec> d_hp(hp.size(), Vec::Zero(static_cast<Eigen::Index>(d)));
    d_hp.back() = d_in.tail(static_cast<Eigen::Index>(d));
    dec_premise_.backward(*grads, premise_cache, d_hp);
    if (dz) *dz = d_in.head(static_cast<Eigen::Index>(cfg_.latent));
    return nll;
}

Vec Generator::encoder_hidden(const Example& ex, EncoderCache* cache) const {
    const std::size_t d = cfg_.hidden;
    const Tensor& emb = store_.value(emb_);
    const auto xp = embed_tokens(emb, ex.premise);
    const auto xh = embed_tokens(emb, ex.hypothesis);
    const auto hp = enc_premise_.forward(store_, xp, LstmState::zeros(d), cache ? &cache->premise : nullptr);
    const auto hh = enc_hypothesis_.forward(store_, xh, LstmState::zeros(d), cache ? &cache->hypothesis : nullptr);
    std::vector<Vec> hp_out, hh_out;
    for (const auto& s : hp) hp_out.push_back(s.h);
    for (const auto& s : hh) hh_out.push_back(s.h);
    const Vec label = label_vector(ex.label);
    const Vec c0 = enc_c0_.forward(store_, label);
    const auto hm = enc_match_.forward(store_, hp_out, hh_out, c0, cache ? &cache->match : nullptr);
    if (cache) {
        cache->steps = hm.size();
        cache->label = label;
    }
    return hm.back().h;
}

void Generator::encoder_backward(ParamStore& grads, const EncoderCache& cache, const Vec& dh) const {
    std::vector<Vec> d_hm(cache.steps, Vec::Zero(static_cast<Eigen::Index>(cfg_.hidden)));
    d_hm.back() = dh;
    const auto mg = enc_match_.backward(grads, cache.match, d_hm);
    enc_premise_.backward(grads, cache.premise, mg.d_premise);
    enc_hypothesis_.backward(grads, cache.hypothesis, mg.d_hypothesis);
    enc_c0_.backward(grads, cache.label, mg.d_c0);
}

Generator::Loss Generator::run(const Example& ex, std::size_t index, const Vec* epsilon, ParamStore* grads,
                               double grad_scale) const {
    check_example(ex);
    Loss out;
    Vec dz;
    Vec* dz_ptr = grads ? &dz : nullptr;
    switch (cfg_.kind) {
    case GeneratorKind::AttEmbed:
    case GeneratorKind::BaseEmbed: {
        const Vec z = table_row(index);
        out.nll = decoder_run(ex, z, grads, grad_scale, dz_ptr, &out.tokens);
        if (grads) {
            auto row = grads->grad(*table_).row(index);
            for (std::size_t j = 0; j < cfg_.latent; ++j) row[j] += dz[static_cast<Eigen::Index>(j)];
            grads->touch_row(*table_, index);
        }
        return out;
    }
    case GeneratorKind::EncDec: {
        EncoderCache cache;
        const Vec h = encoder_hidden(ex, grads ? &cache : nullptr);
        const Vec z = enc_z_.forward(store_, h);
        out.nll = decoder_run(ex, z, grads, grad_scale, dz_ptr, &out.tokens);
        if (grads) encoder_backward(*grads, cache, enc_z_.backward(*grads, h, dz));
        return out;
    }
    case GeneratorKind::VaeEncDec: {
        if (!epsilon) throw std::invalid_argument("Generator: vae-encdec needs an epsilon sample");
        check_latent(*epsilon);
        EncoderCache cache;
        const Vec h = encoder_hidden(ex, grads ? &cache : nullptr);
        const Vec mu = enc_z_.forward(store_, h);
        const Vec logvar = enc_logvar_.forward(store_, h);
        const Vec sigma = (0.5 * logvar.array()).exp().matrix();
        const Vec z = mu + sigma.cwiseProduct(*epsilon);
        out.kl = -0.5 * (1.0 + logvar.array() - mu.array().square() - logvar.array().exp()).sum();
        out.nll = decoder_run(ex, z, grads, grad_scale, dz_ptr, &out.tokens);
        if (grads) {
            const Vec d_mu = dz + grad_scale * mu;
            const Vec d_logvar = (dz.array() * epsilon->array() * 0.5 * sigma.array() +
                                  grad_scale * 0.5 * (logvar.array().exp() - 1.0))
                                     .matrix();
            Vec dh = enc_z_.backward(*grads, h, d_mu);
            dh += enc_logvar_.backward(*grads, h, d_logvar);
            encoder_backward(*grads, cache, dh);
        }
        return out;
    }
    }
    throw std::logic_error("unreachable");
}

Generator::Loss Generator::loss(const Example& ex, std::size_t index, const Vec* epsilon) const {
    return run(ex, index, epsilon, nullptr, 0.0);
}

Generator::Loss Generator::loss_and_backward(const Example& ex, std::size_t index, const Vec* epsilon,
                                             double grad_scale) {
    return run(ex, index, epsilon, &store_, grad_scale);
}

Generator::Loss Generator::decode_loss(const Example& ex, const Vec& z) const {
    check_example(ex);
    check_latent(z);
    Loss out;
    out.nll = decoder_run(ex, z, nullptr, 0.0, nullptr, &out.tokens);
    return out;
}

Vec Generator::encode_latent(const Example& ex) const {
    if (!uses_encoder(cfg_.kind)) throw std::logic_error("Generator: embed kinds have no encoder");
    check_example(ex);
    return enc_z_.forward(store_, encoder_hidden(ex, nullptr));
}

VaeLatent Generator::vae_latent(const Example& ex, const Vec& epsilon) const {
    if (cfg_.kind != GeneratorKind::VaeEncDec) throw std::logic_error("Generator: not a vae-encdec model");
    check_example(ex);
    check_latent(epsilon);
    const Vec h = encoder_hidden(ex, nullptr);
    VaeLatent out;
    out.mu = enc_z_.forward(store_, h);
    const Vec logvar = enc_logvar_.forward(store_, h);
    out.sigma = (0.5 * logvar.array()).exp().matrix();
    out.epsilon = epsilon;
    out.z = out.mu + out.sigma.cwiseProduct(epsilon);
    out.kl = -0.5 * (1.0 + logvar.array() - out.mu.array().square() - logvar.array().exp()).sum();
    return out;
}

std::optional<Vec> Generator::latent_sigma() const {
    const Tensor& s = store_.value(sigma_);
    for (double v : s.values()) {
        if (!(v >= 0.0)) return std::nullopt;
    }
    return Vec(s.vector());
}

void Generator::set_latent_sigma(const Vec& sigma) {
    check_latent(sigma);
    if ((sigma.array() < 0.0).any() || !sigma.allFinite()) {
        throw std::invalid_argument("Generator: latent sigma must be finite and non-negative");
    }
    store_.value(sigma_).vector() = sigma;
}

namespace {

Vec column_std(const std::vector<Vec>& rows, bool per_dimension) {
    const auto z = rows.front().size();
    const double n = static_cast<double>(rows.size());
    Vec mean = Vec::Zero(z);
    for (const auto& r : rows) mean += r;
    mean /= n;
    Vec var = Vec::Zero(z);
    for (const auto& r : rows) var += (r - mean).array().square().matrix();
    var /= n;
    if (per_dimension) return var.array().sqrt().matrix();
    // Scalar std over every entry, broadcast to all dimensions.
    const double grand = mean.mean();
    double total = 0.0;
    for (const auto& r : rows) total += (r.array() - grand).square().sum();
    return Vec::Constant(z, std::sqrt(total / (n * static_cast<double>(z))));
}

} // namespace

Vec Generator::estimate_latent_sigma(std::span<const Example> train, bool per_dimension) const {
    const auto z = static_cast<Eigen::Index>(cfg_.latent);
    if (cfg_.kind == GeneratorKind::VaeEncDec) return Vec::Ones(z);
    std::vector<Vec> rows;
    if (table_) {
        const Tensor& t = store_.value(*table_);
        for (std::size_t i = 0; i < t.rows(); ++i) rows.push_back(table_row(i));
    } else {
        if (train.empty()) throw std::invalid_argument("Generator: need training examples to estimate sigma");
        for (const auto& ex : train) rows.push_back(encode_latent(ex));
    }
    return column_std(rows, per_dimension);
}

Generator::State Generator::start(std::span<const TokenId> premise, Label label, const Vec& z) const {
    if (premise.size() != cfg_.limits.premise) {
        throw std::invalid_argument("Generator: premise must be padded to " + std::to_string(cfg_.limits.premise));
    }
    check_latent(z);
    const std::size_t d = cfg_.hidden;
    const auto hp = dec_premise_.forward(store_, embed_tokens(store_.value(emb_), premise), LstmState::zeros(d));
    const Vec lv = label_vector(label);
    State s;
    if (attention_decoder()) {
        std::vector<Vec> hp_out;
        for (const auto& st : hp) hp_out.push_back(st.h);
        s.premise = std::make_shared<const MatchLstm::Premise>(dec_match_.prepare(store_, hp_out));
        s.hypothesis = LstmState::zeros(d);
        s.match = {Vec::Zero(static_cast<Eigen::Index>(d)), dec_c0_.forward(store_, concat({&z, &lv}))};
    } else {
        const Vec& last = hp.back().h;
        s.hypothesis = {Vec::Zero(static_cast<Eigen::Index>(cfg_.decoder_size())),
                        dec_c0_.forward(store_, concat({&z, &lv, &last}))};
    }
    return advance(s, kNullId);
}

Generator::State Generator::advance(const State& state, TokenId token) const {
    const Tensor& emb = store_.value(emb_);
    if (token >= emb.rows()) throw std::out_of_range("Generator: token id outside vocabulary");
    const Vec x = Eigen::Map<const Vec>(emb.row(token).data(), static_cast<Eigen::Index>(emb.cols()));
    State next;
    next.premise = state.premise;
    next.hypothesis = dec_hypothesis_.step(store_, x, state.hypothesis);
    if (attention_decoder()) {
        next.match = dec_match_.step(store_, *state.premise, next.hypothesis.h, state.match);
        next.log_probs = out_.log_distribution(store_, next.match.h);
    } else {
        next.log_probs = out_.log_distribution(store_, next.hypothesis.h);
    }
    return next;
}

} // namespace nligen
