#include "nligen/generation/decode.hpp"

#include <stdexcept>

namespace nligen {

void GenerationConfig::validate() const {
    if (beam_k == 0) throw std::invalid_argument("beam size must be at least 1");
    if (latent_sigma && (latent_sigma->array() < 0.0).any()) {
        throw std::invalid_argument("latent sigma must be non-negative");
    }
}

Vec sample_latent(const Vec& sigma, Rng& rng) {
    if (sigma.size() == 0) throw std::invalid_argument("sample_latent: latent sigma has not been computed");
    Vec z(sigma.size());
    for (Eigen::Index j = 0; j < sigma.size(); ++j) z[j] = rng.normal(0.0, sigma[j]);
    return z;
}

Hypothesis greedy_generate(const Generator& gen, const TokenIds& premise, Label label, const Vec& z,
                           const GenerationConfig& cfg) {
    cfg.validate();
    return greedy_generate(gen, gen.start(premise, label, z), cfg.max_len, cfg.banned);
}

BeamResult beam_generate(const Generator& gen, const TokenIds& premise, Label label, const Vec& z,
                         const GenerationConfig& cfg) {
    cfg.validate();
    return beam_generate(gen, gen.start(premise, label, z), cfg.beam_k, cfg.max_len, cfg.banned);
}

Example generate_for_example(const Generator& gen, const Example& source, const GenerationConfig& cfg, Rng& rng) {
    cfg.validate();
    Vec sigma;
    if (cfg.latent_sigma) {
        sigma = *cfg.latent_sigma;
    } else if (auto s = gen.latent_sigma()) {
        sigma = *s;
    }
    const Vec z = sample_latent(sigma, rng);
    const Hypothesis h = cfg.beam_k == 1 ? greedy_generate(gen, source.premise, source.label, z, cfg)
                                         : beam_generate(gen, source.premise, source.label, z, cfg).best;
    Example out;
    out.premise = source.premise;
    out.label = source.label;
    out.hypothesis = pad_to(h.tokens, gen.config().limits.hypothesis);
    out.gen_logprob = h.log_prob;
    return out;
}

} // namespace nligen
