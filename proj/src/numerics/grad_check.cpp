#include "nligen/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nligen {

Tensor finite_diff_grad(const std::function<double()>& loss_fn, ParamStore& store, const std::string& param_name,
                        double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step h must be positive");
    const double first = loss_fn();
    const double second = loss_fn();
    if (first != second) {
        throw std::runtime_error("finite_diff_grad: loss function is not deterministic (" + std::to_string(first) +
                                 " vs " + std::to_string(second) + ")");
    }
    Tensor& x = store.value(param_name);
    Tensor out(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double plus = loss_fn();
        x[i] = orig - h;
        const double minus = loss_fn();
        x[i] = orig;
        out[i] = (plus - minus) / (2.0 * h);
    }
    return out;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
    if (!analytic.same_shape(numeric)) throw std::invalid_argument("max_relative_error: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i];
        const double n = numeric[i];
        const double denom = std::max({std::abs(a), std::abs(n), floor});
        worst = std::max(worst, std::abs(a - n) / denom);
    }
    return worst;
}

} // namespace nligen
