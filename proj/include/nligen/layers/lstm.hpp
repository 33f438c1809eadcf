#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nligen/numerics/param_store.hpp"
#include "nligen/numerics/random.hpp"

namespace nligen {

struct LstmState {
    Vec h; // output
    Vec c; // cell state

    static LstmState zeros(std::size_t hidden) { return {Vec::Zero(hidden), Vec::Zero(hidden)}; }
};

// Per-step intermediates retained for backprop.
struct LstmStepCache {
    Vec x, h_prev, c_prev;
    Vec i, f, o, g; // gates and candidate
    Vec tanh_c;
};

// Standard LSTM cell:
//   i = s(W_i x + U_i h + b_i), f = s(...), o = s(...)
//   C = f * C_prev + i * tanh(W_c x + U_c h + b_c),  h = o * tanh(C)
// The four gate matrices are stored stacked in the order i, f, o, c:
// W is [4d x e], U is [4d x d], b is [4d].
class Lstm {
public:
    Lstm() = default;
    Lstm(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t hidden);

    std::size_t input_size() const { return input_; }
    std::size_t hidden_size() const { return hidden_; }
    ParamId weights_id() const { return w_; }
    ParamId recurrent_id() const { return u_; }
    ParamId bias_id() const { return b_; }

    // Glorot-uniform matrices per gate block, zero biases, forget bias 1.
    void initialize(ParamStore& store, Rng& rng) const;

    LstmState step(const ParamStore& store, const Vec& x, const LstmState& prev, LstmStepCache* cache = nullptr) const;

    // dh, dc: total gradient reaching this step's outputs. Accumulates parameter
    // gradients and writes gradients for x and the previous state.
    void step_backward(ParamStore& store, const LstmStepCache& cache, const Vec& dh, const Vec& dc, Vec& dx,
                       Vec& dh_prev, Vec& dc_prev) const;

    struct SequenceCache {
        std::vector<LstmStepCache> steps;
    };
    struct SequenceGrads {
        std::vector<Vec> dx;
        LstmState d_init;
    };

    // Fold of step over xs. Throws on an empty sequence.
    std::vector<LstmState> forward(const ParamStore& store, std::span<const Vec> xs, const LstmState& init,
                                   SequenceCache* cache = nullptr) const;

    // dh[t] is the loss gradient wrt output h_t (size must match the cached
    // sequence); dc_last optionally adds gradient on the final cell state.
    SequenceGrads backward(ParamStore& store, const SequenceCache& cache, std::span<const Vec> dh,
                           const Vec* dc_last = nullptr) const;

private:
    void check_input(const Vec& x, const LstmState& prev) const;

    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
    ParamId w_ = 0, u_ = 0, b_ = 0;
};

} // namespace nligen
