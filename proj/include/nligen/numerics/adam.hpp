#pragma once

#include "nligen/numerics/param_store.hpp"

namespace nligen {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

// One bias-corrected Adam update over every trainable entry, then gradients
// are zeroed. Dense entries share the store's step count; RowSparse entries
// update only touched rows, each with its own step count.
// Throws std::domain_error naming the parameter if any gradient is non-finite;
// in that case nothing is modified.
void adam_step(ParamStore& store, const AdamConfig& cfg);

} // namespace nligen
