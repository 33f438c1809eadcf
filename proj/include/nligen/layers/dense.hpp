#pragma once

#include <string>

#include "nligen/numerics/param_store.hpp"
#include "nligen/numerics/random.hpp"

namespace nligen {

// Fully connected layer y = W x + b with W [out x in].
class Dense {
public:
    Dense() = default;
    Dense(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t output);

    std::size_t input_size() const { return input_; }
    std::size_t output_size() const { return output_; }
    ParamId weights_id() const { return w_; }
    ParamId bias_id() const { return b_; }

    void initialize(ParamStore& store, Rng& rng) const;
    Vec forward(const ParamStore& store, const Vec& x) const;
    // Accumulates dW += dy x^T, db += dy and returns W^T dy.
    Vec backward(ParamStore& store, const Vec& x, const Vec& dy) const;

private:
    std::size_t input_ = 0, output_ = 0;
    ParamId w_ = 0, b_ = 0;
};

} // namespace nligen
