#include "nligen/layers/dense.hpp"

#include "nligen/numerics/ops.hpp"

namespace nligen {

Dense::Dense(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t output)
    : input_(input), output_(output) {
    w_ = store.add(prefix + ".W", {output, input});
    b_ = store.add(prefix + ".b", {output});
}

void Dense::initialize(ParamStore& store, Rng& rng) const {
    glorot_uniform(store.value(w_), rng);
    store.value(b_).set_zero();
}

Vec Dense::forward(const ParamStore& store, const Vec& x) const {
    return dense_forward(as_span(x), store.value(w_), store.value(b_).values());
}

Vec Dense::backward(ParamStore& store, const Vec& x, const Vec& dy) const {
    store.grad(w_).matrix().noalias() += dy * x.transpose();
    store.grad(b_).vector() += dy;
    return store.value(w_).matrix().transpose() * dy;
}

} // namespace nligen
