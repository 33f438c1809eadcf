#pragma once

#include <span>
#include <string>
#include <vector>

#include "nligen/layers/lstm.hpp"

namespace nligen {

// Match-LSTM. At hypothesis step t every premise state h_p_j is scored
//   e_tj = w_e . tanh(W_s h_p_j + W_t h_h_t + W_m h_m_{t-1})
// alpha_t = softmax_j(e_tj), a_t = sum_j alpha_tj h_p_j, and the inner LSTM
// consumes [a_t, h_h_t]. Output size equals the premise/hypothesis state size d.
class MatchLstm {
public:
    MatchLstm() = default;
    MatchLstm(ParamStore& store, const std::string& prefix, std::size_t hidden);

    std::size_t hidden_size() const { return hidden_; }
    const Lstm& inner() const { return inner_; }

    void initialize(ParamStore& store, Rng& rng) const;

    // Premise states and their W_s projection, computed once per premise.
    struct Premise {
        RowMatrix states;    // M x d
        RowMatrix projected; // M x d, row j = W_s h_p_j
    };
    Premise prepare(const ParamStore& store, std::span<const Vec> premise_states) const;

    struct StepCache {
        Vec h_hyp;
        Vec h_prev;
        RowMatrix scores; // M x d, tanh(W_s h_p_j + q)
        Vec alpha;
        LstmStepCache inner;
    };

    LstmState step(const ParamStore& store, const Premise& premise, const Vec& h_hyp, const LstmState& prev,
                   StepCache* cache = nullptr) const;

    struct Cache {
        Premise premise;
        std::vector<StepCache> steps;
    };
    struct Grads {
        std::vector<Vec> d_premise;
        std::vector<Vec> d_hypothesis;
        Vec d_c0;
    };

    std::vector<LstmState> forward(const ParamStore& store, std::span<const Vec> premise_states,
                                   std::span<const Vec> hypothesis_states, const Vec& c0,
                                   Cache* cache = nullptr) const;

    Grads backward(ParamStore& store, const Cache& cache, std::span<const Vec> dh) const;

private:
    std::size_t hidden_ = 0;
    ParamId w_s_ = 0, w_t_ = 0, w_m_ = 0, w_e_ = 0;
    Lstm inner_;
};

} // namespace nligen
