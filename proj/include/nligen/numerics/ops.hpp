#pragma once

#include <span>

#include "nligen/numerics/random.hpp"
#include "nligen/numerics/tensor.hpp"

namespace nligen {

// output_i = sum_j weights[i][j] * input[j] + bias[i]
Vec dense_forward(std::span<const double> input, const Tensor& weights, std::span<const double> bias);

// Max-subtracted softmax. Throws on empty input.
Vec softmax(std::span<const double> logits);
Vec log_softmax(std::span<const double> logits);

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline std::span<const double> as_span(const Vec& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// Lowest index wins on ties.
std::size_t argmax(std::span<const double> values);

// Glorot-uniform fill of rows [row_begin, row_end) of a matrix, with fan-out
// taken as the block's row count.
void glorot_uniform(Tensor& t, Rng& rng, std::size_t row_begin, std::size_t row_end);
inline void glorot_uniform(Tensor& t, Rng& rng) { glorot_uniform(t, rng, 0, t.rows()); }

} // namespace nligen
