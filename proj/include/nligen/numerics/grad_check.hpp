#pragma once

#include <functional>
#include <string>

#include "nligen/numerics/param_store.hpp"

namespace nligen {

// Central-difference gradient of loss_fn with respect to one named entry:
// (loss(x + h) - loss(x - h)) / 2h per element. The entry is restored
// afterwards. Throws if h <= 0 or if loss_fn gives different values on two
// calls at the unperturbed point.
Tensor finite_diff_grad(const std::function<double()>& loss_fn, ParamStore& store, const std::string& param_name,
                        double h);

// Max over elements of |a - n| / max(|a|, |n|, floor); the floor keeps
// near-zero gradients from dominating the ratio.
double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-6);

} // namespace nligen
