#include "nligen/numerics/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace nligen {

void AdamConfig::validate() const {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in (0, 1)");
    }
    if (!(learning_rate > 0.0) || !(epsilon > 0.0)) {
        throw std::invalid_argument("Adam learning rate and epsilon must be positive");
    }
}

namespace {

void update_span(std::span<double> p, std::span<double> g, std::span<double> m, std::span<double> v,
                 std::uint64_t t, const AdamConfig& cfg) {
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        g[i] = 0.0;
    }
}

} // namespace

void adam_step(ParamStore& store, const AdamConfig& cfg) {
    cfg.validate();
    for (const auto& e : store.entries()) {
        if (e.mode == UpdateMode::Frozen) continue;
        if (!e.grad.all_finite()) throw std::domain_error("non-finite gradient in parameter " + e.name);
    }
    const std::uint64_t t = store.step_count() + 1;
    for (ParamId id = 0; id < store.size(); ++id) {
        auto& e = store.entry(id);
        switch (e.mode) {
        case UpdateMode::Frozen:
            break;
        case UpdateMode::Dense:
            update_span(e.value.values(), e.grad.values(), e.adam_m.values(), e.adam_v.values(), t, cfg);
            break;
        case UpdateMode::RowSparse:
            for (std::size_t r = 0; r < e.touched.size(); ++r) {
                if (!e.touched[r]) continue;
                update_span(e.value.row(r), e.grad.row(r), e.adam_m.row(r), e.adam_v.row(r), ++e.row_steps[r], cfg);
                e.touched[r] = 0;
            }
            break;
        }
    }
    store.set_step_count(t);
}

} // namespace nligen
