#include "nligen/layers/lstm.hpp"

#include <stdexcept>

#include "nligen/numerics/ops.hpp"

namespace nligen {

Lstm::Lstm(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t hidden)
    : input_(input), hidden_(hidden) {
    if (input == 0 || hidden == 0) throw std::invalid_argument("Lstm: sizes must be positive");
    w_ = store.add(prefix + ".W", {4 * hidden, input});
    u_ = store.add(prefix + ".U", {4 * hidden, hidden});
    b_ = store.add(prefix + ".b", {4 * hidden});
}

void Lstm::initialize(ParamStore& store, Rng& rng) const {
    for (std::size_t gate = 0; gate < 4; ++gate) {
        glorot_uniform(store.value(w_), rng, gate * hidden_, (gate + 1) * hidden_);
        glorot_uniform(store.value(u_), rng, gate * hidden_, (gate + 1) * hidden_);
    }
    Tensor& b = store.value(b_);
    b.set_zero();
    for (std::size_t j = hidden_; j < 2 * hidden_; ++j) b[j] = 1.0;
}

void Lstm::check_input(const Vec& x, const LstmState& prev) const {
    if (static_cast<std::size_t>(x.size()) != input_ || static_cast<std::size_t>(prev.h.size()) != hidden_ ||
        static_cast<std::size_t>(prev.c.size()) != hidden_) {
        throw std::invalid_argument("Lstm: expected input " + std::to_string(input_) + " and state " +
                                    std::to_string(hidden_) + ", got input " + std::to_string(x.size()) +
                                    " and state " + std::to_string(prev.h.size()) + "/" +
                                    std::to_string(prev.c.size()));
    }
}

LstmState Lstm::step(const ParamStore& store, const Vec& x, const LstmState& prev, LstmStepCache* cache) const {
    check_input(x, prev);
    const auto d = static_cast<Eigen::Index>(hidden_);
    Vec z = store.value(b_).vector();
    z.noalias() += store.value(w_).matrix() * x;
    z.noalias() += store.value(u_).matrix() * prev.h;

    Vec i = z.segment(0, d).unaryExpr([](double v) { return sigmoid(v); });
    Vec f = z.segment(d, d).unaryExpr([](double v) { return sigmoid(v); });
    Vec o = z.segment(2 * d, d).unaryExpr([](double v) { return sigmoid(v); });
    Vec g = z.segment(3 * d, d).array().tanh().matrix();

    LstmState next;
    next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
    Vec tanh_c = next.c.array().tanh().matrix();
    next.h = o.cwiseProduct(tanh_c);

    if (cache) {
        cache->x = x;
        cache->h_prev = prev.h;
        cache->c_prev = prev.c;
        cache->i = std::move(i);
        cache->f = std::move(f);
        cache->o = std::move(o);
        cache->g = std::move(g);
        cache->tanh_c = std::move(tanh_c);
    }
    return next;
}

void Lstm::step_backward(ParamStore& store, const LstmStepCache& k, const Vec& dh, const Vec& dc_in, Vec& dx,
                         Vec& dh_prev, Vec& dc_prev) const {
    const auto d = static_cast<Eigen::Index>(hidden_);
    const Vec dc = dc_in + dh.cwiseProduct(k.o).cwiseProduct((1.0 - k.tanh_c.array().square()).matrix());

    Vec dz(4 * d);
    dz.segment(0, d) = (dc.array() * k.g.array() * k.i.array() * (1.0 - k.i.array())).matrix();
    dz.segment(d, d) = (dc.array() * k.c_prev.array() * k.f.array() * (1.0 - k.f.array())).matrix();
    dz.segment(2 * d, d) = (dh.array() * k.tanh_c.array() * k.o.array() * (1.0 - k.o.array())).matrix();
    dz.segment(3 * d, d) = (dc.array() * k.i.array() * (1.0 - k.g.array().square())).matrix();

    dc_prev = dc.cwiseProduct(k.f);
    store.grad(w_).matrix().noalias() += dz * k.x.transpose();
    store.grad(u_).matrix().noalias() += dz * k.h_prev.transpose();
    store.grad(b_).vector() += dz;
    dx.noalias() = store.value(w_).matrix().transpose() * dz;
    dh_prev.noalias() = store.value(u_).matrix().transpose() * dz;
}

std::vector<LstmState> Lstm::forward(const ParamStore& store, std::span<const Vec> xs, const LstmState& init,
                                     SequenceCache* cache) const {
    if (xs.empty()) throw std::invalid_argument("Lstm::forward: empty sequence");
    std::vector<LstmState> out;
    out.reserve(xs.size());
    if (cache) cache->steps.assign(xs.size(), {});
    const LstmState* prev = &init;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        out.push_back(step(store, xs[t], *prev, cache ? &cache->steps[t] : nullptr));
        prev = &out.back();
    }
    return out;
}

Lstm::SequenceGrads Lstm::backward(ParamStore& store, const SequenceCache& cache, std::span<const Vec> dh,
                                   const Vec* dc_last) const {
    const std::size_t n = cache.steps.size();
    if (dh.size() != n) throw std::invalid_argument("Lstm::backward: gradient count does not match sequence");
    SequenceGrads out;
    out.dx.resize(n);
    Vec dh_carry = Vec::Zero(static_cast<Eigen::Index>(hidden_));
    Vec dc_carry = dc_last ? *dc_last : Vec::Zero(static_cast<Eigen::Index>(hidden_));
    Vec dh_prev, dc_prev;
    for (std::size_t t = n; t-- > 0;) {
        const Vec dh_total = dh[t] + dh_carry;
        step_backward(store, cache.steps[t], dh_total, dc_carry, out.dx[t], dh_prev, dc_prev);
        dh_carry = std::move(dh_prev);
        dc_carry = std::move(dc_prev);
    }
    out.d_init = {std::move(dh_carry), std::move(dc_carry)};
    return out;
}

} // namespace nligen
