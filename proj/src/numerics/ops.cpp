#include "nligen/numerics/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace nligen {

Vec dense_forward(std::span<const double> input, const Tensor& weights, std::span<const double> bias) {
    if (weights.rank() != 2 || weights.cols() != input.size() || weights.rows() != bias.size()) {
        throw std::invalid_argument("dense_forward: weights " + weights.shape_string() + " incompatible with input [" +
                                    std::to_string(input.size()) + "] and bias [" + std::to_string(bias.size()) +
                                    "]");
    }
    ConstVectorMap x(input.data(), static_cast<Eigen::Index>(input.size()));
    ConstVectorMap b(bias.data(), static_cast<Eigen::Index>(bias.size()));
    return weights.matrix() * x + b;
}

Vec softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    ConstVectorMap x(logits.data(), static_cast<Eigen::Index>(logits.size()));
    Vec out = (x.array() - x.maxCoeff()).exp().matrix();
    out /= out.sum();
    return out;
}

Vec log_softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("log_softmax: empty input");
    ConstVectorMap x(logits.data(), static_cast<Eigen::Index>(logits.size()));
    const double mx = x.maxCoeff();
    const double lse = mx + std::log((x.array() - mx).exp().sum());
    return (x.array() - lse).matrix();
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

void glorot_uniform(Tensor& t, Rng& rng, std::size_t row_begin, std::size_t row_end) {
    const double fan_out = static_cast<double>(row_end - row_begin);
    const double fan_in = static_cast<double>(t.cols());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t r = row_begin; r < row_end; ++r) {
        for (double& v : t.row(r)) v = (2.0 * rng.uniform() - 1.0) * limit;
    }
}

} // namespace nligen
