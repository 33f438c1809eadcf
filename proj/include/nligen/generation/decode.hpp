#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "nligen/data/example.hpp"
#include "nligen/models/generator.hpp"
#include "nligen/numerics/ops.hpp"
#include "nligen/numerics/random.hpp"

namespace nligen {

struct GenerationConfig {
    std::size_t beam_k = 1;
    std::size_t max_len = 15;
    // Overrides the generator's stored sigma when set.
    std::optional<Vec> latent_sigma;
    std::uint64_t seed = 0;
    // Token ids never emitted (typically <oov> when it has no corpus frequency).
    std::vector<TokenId> banned;

    void validate() const;
};

// Z with element j drawn from N(0, sigma_j). Throws if sigma is empty.
Vec sample_latent(const Vec& sigma, Rng& rng);

struct Hypothesis {
    TokenIds tokens;        // excludes the start and terminal <null>
    double log_prob = 0.0;  // joint log-probability, terminal <null> included when finished
    bool finished = false;  // ended by emitting <null>
};

struct BeamResult {
    Hypothesis best;
    std::vector<Hypothesis> finalists; // best first
};

// Decoding works on any model exposing
//   State advance(const State&, TokenId) const;
//   const Vec& log_probs(const State&) const;
// where log_probs gives the distribution of the next token.
template <class Model>
concept StepDecoder = requires(const Model& m, const typename Model::State& s, TokenId t) {
    { m.advance(s, t) } -> std::convertible_to<typename Model::State>;
    { m.log_probs(s) } -> std::convertible_to<const Vec&>;
};

namespace detail {

inline Vec masked(const Vec& lp, const std::vector<TokenId>& banned) {
    Vec out = lp;
    for (TokenId t : banned) {
        if (t < out.size()) out[t] = -std::numeric_limits<double>::infinity();
    }
    return out;
}

} // namespace detail

// Appends the argmax token (lowest id on ties) until <null> or max_len tokens.
template <StepDecoder Model>
Hypothesis greedy_generate(const Model& model, typename Model::State state, std::size_t max_len,
                           const std::vector<TokenId>& banned = {}) {
    Hypothesis h;
    while (h.tokens.size() < max_len) {
        const Vec lp = detail::masked(model.log_probs(state), banned);
        const auto tok = static_cast<TokenId>(argmax(as_span(lp)));
        h.log_prob += lp[tok];
        if (tok == kNullId) {
            h.finished = true;
            return h;
        }
        h.tokens.push_back(tok);
        if (h.tokens.size() < max_len) state = model.advance(state, tok);
    }
    return h;
}

// k-beam search: each unfinished entry is expanded by every vocabulary word,
// finished entries compete unchanged, and the k best by joint log-probability
// survive (ties: earlier parent, then lower token id). Stops when every entry
// is finished or has max_len tokens.
template <StepDecoder Model>
BeamResult beam_generate(const Model& model, typename Model::State state, std::size_t k, std::size_t max_len,
                         const std::vector<TokenId>& banned = {}) {
    struct Entry {
        Hypothesis hyp;
        std::optional<typename Model::State> state; // next-token distribution available
    };
    struct Candidate {
        std::size_t parent;
        std::optional<TokenId> token; // empty: carry the finished parent
        double log_prob;
    };

    std::vector<Entry> beam;
    beam.push_back({Hypothesis{}, std::move(state)});
    auto done = [&](const Entry& e) { return e.hyp.finished || e.hyp.tokens.size() >= max_len; };

    while (!std::all_of(beam.begin(), beam.end(), done)) {
        std::vector<Candidate> cands;
        std::vector<Vec> dists(beam.size());
        for (std::size_t p = 0; p < beam.size(); ++p) {
            const Entry& e = beam[p];
            if (done(e)) {
                cands.push_back({p, std::nullopt, e.hyp.log_prob});
                continue;
            }
            dists[p] = detail::masked(model.log_probs(*e.state), banned);
            for (Eigen::Index t = 0; t < dists[p].size(); ++t) {
                if (dists[p][t] == -std::numeric_limits<double>::infinity()) continue;
                cands.push_back({p, static_cast<TokenId>(t), e.hyp.log_prob + dists[p][t]});
            }
        }
        const std::size_t keep = std::min(k, cands.size());
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
        std::vector<Entry> next;
        next.reserve(keep);
        for (std::size_t i = 0; i < keep; ++i) {
            const Candidate& c = cands[i];
            const Entry& parent = beam[c.parent];
            if (!c.token) {
                next.push_back(parent);
                continue;
            }
            Entry child;
            child.hyp = parent.hyp;
            child.hyp.log_prob = c.log_prob;
            if (*c.token == kNullId) {
                child.hyp.finished = true;
            } else {
                child.hyp.tokens.push_back(*c.token);
                if (child.hyp.tokens.size() < max_len) child.state = model.advance(*parent.state, *c.token);
            }
            next.push_back(std::move(child));
        }
        beam = std::move(next);
    }

    BeamResult out;
    for (auto& e : beam) out.finalists.push_back(std::move(e.hyp));
    out.best = out.finalists.front();
    return out;
}

// Convenience wrappers over a Generator.
Hypothesis greedy_generate(const Generator& gen, const TokenIds& premise, Label label, const Vec& z,
                           const GenerationConfig& cfg);
BeamResult beam_generate(const Generator& gen, const TokenIds& premise, Label label, const Vec& z,
                         const GenerationConfig& cfg);

// Draws Z from N(0, sigma) (sigma from cfg or the generator), decodes with
// cfg.beam_k, and pairs the hypothesis with the source premise and label.
// The result carries gen_logprob; origin_index is left to the caller.
Example generate_for_example(const Generator& gen, const Example& source, const GenerationConfig& cfg, Rng& rng);

} // namespace nligen
