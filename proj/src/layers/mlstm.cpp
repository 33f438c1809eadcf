#include "nligen/layers/mlstm.hpp"

#include <stdexcept>

#include "nligen/numerics/ops.hpp"

namespace nligen {

MatchLstm::MatchLstm(ParamStore& store, const std::string& prefix, std::size_t hidden) : hidden_(hidden) {
    w_s_ = store.add(prefix + ".W_s", {hidden, hidden});
    w_t_ = store.add(prefix + ".W_t", {hidden, hidden});
    w_m_ = store.add(prefix + ".W_m", {hidden, hidden});
    w_e_ = store.add(prefix + ".w_e", {hidden});
    inner_ = Lstm(store, prefix + ".lstm", 2 * hidden, hidden);
}

void MatchLstm::initialize(ParamStore& store, Rng& rng) const {
    glorot_uniform(store.value(w_s_), rng);
    glorot_uniform(store.value(w_t_), rng);
    glorot_uniform(store.value(w_m_), rng);
    Tensor& we = store.value(w_e_);
    const double limit = std::sqrt(6.0 / (static_cast<double>(hidden_) + 1.0));
    for (double& v : we.values()) v = (2.0 * rng.uniform() - 1.0) * limit;
    inner_.initialize(store, rng);
}

MatchLstm::Premise MatchLstm::prepare(const ParamStore& store, std::span<const Vec> premise_states) const {
    if (premise_states.empty()) throw std::invalid_argument("MatchLstm: empty premise");
    const auto d = static_cast<Eigen::Index>(hidden_);
    Premise p;
    p.states.resize(static_cast<Eigen::Index>(premise_states.size()), d);
    for (std::size_t j = 0; j < premise_states.size(); ++j) {
        if (premise_states[j].size() != d) {
            throw std::invalid_argument("MatchLstm: premise state " + std::to_string(j) + " has size " +
                                        std::to_string(premise_states[j].size()) + ", expected " +
                                        std::to_string(hidden_));
        }
        p.states.row(static_cast<Eigen::Index>(j)) = premise_states[j].transpose();
    }
    p.projected.noalias() = p.states * store.value(w_s_).matrix().transpose();
    return p;
}

LstmState MatchLstm::step(const ParamStore& store, const Premise& premise, const Vec& h_hyp, const LstmState& prev,
                          StepCache* cache) const {
    const auto d = static_cast<Eigen::Index>(hidden_);
    if (h_hyp.size() != d) {
        throw std::invalid_argument("MatchLstm: hypothesis state has size " + std::to_string(h_hyp.size()) +
                                    ", expected " + std::to_string(hidden_));
    }
    Vec q = store.value(w_t_).matrix() * h_hyp;
    q.noalias() += store.value(w_m_).matrix() * prev.h;

    RowMatrix scores = (premise.projected.rowwise() + q.transpose()).array().tanh().matrix();
    const Vec e = scores * store.value(w_e_).vector();
    Vec alpha = softmax(as_span(e));

    Vec x(2 * d);
    x.segment(0, d).noalias() = premise.states.transpose() * alpha;
    x.segment(d, d) = h_hyp;

    LstmState next = inner_.step(store, x, prev, cache ? &cache->inner : nullptr);
    if (cache) {
        cache->h_hyp = h_hyp;
        cache->h_prev = prev.h;
        cache->scores = std::move(scores);
        cache->alpha = std::move(alpha);
    }
    return next;
}

std::vector<LstmState> MatchLstm::forward(const ParamStore& store, std::span<const Vec> premise_states,
                                          std::span<const Vec> hypothesis_states, const Vec& c0, Cache* cache) const {
    if (hypothesis_states.empty()) throw std::invalid_argument("MatchLstm: empty hypothesis");
    if (c0.size() != static_cast<Eigen::Index>(hidden_)) {
        throw std::invalid_argument("MatchLstm: initial cell state has size " + std::to_string(c0.size()) +
                                    ", expected " + std::to_string(hidden_));
    }
    Premise local;
    Premise& premise = cache ? cache->premise : local;
    premise = prepare(store, premise_states);
    if (cache) cache->steps.assign(hypothesis_states.size(), {});

    std::vector<LstmState> out;
    out.reserve(hypothesis_states.size());
    LstmState prev{Vec::Zero(static_cast<Eigen::Index>(hidden_)), c0};
    for (std::size_t t = 0; t < hypothesis_states.size(); ++t) {
        out.push_back(step(store, premise, hypothesis_states[t], prev, cache ? &cache->steps[t] : nullptr));
        prev = out.back();
    }
    return out;
}

MatchLstm::Grads MatchLstm::backward(ParamStore& store, const Cache& cache, std::span<const Vec> dh) const {
    const std::size_t n = cache.steps.size();
    if (dh.size() != n) throw std::invalid_argument("MatchLstm::backward: gradient count does not match sequence");
    const auto d = static_cast<Eigen::Index>(hidden_);
    const auto m = cache.premise.states.rows();

    RowMatrix d_states = RowMatrix::Zero(m, d);
    RowMatrix d_projected = RowMatrix::Zero(m, d);
    Grads out;
    out.d_hypothesis.resize(n);

    const auto& w_t = store.value(w_t_).matrix();
    const auto& w_m = store.value(w_m_).matrix();
    const Vec w_e = store.value(w_e_).vector();

    Vec dh_carry = Vec::Zero(d);
    Vec dc_carry = Vec::Zero(d);
    Vec dx, dh_prev, dc_prev;
    for (std::size_t t = n; t-- > 0;) {
        const StepCache& k = cache.steps[t];
        inner_.step_backward(store, k.inner, dh[t] + dh_carry, dc_carry, dx, dh_prev, dc_prev);

        const Vec da = dx.segment(0, d);
        Vec d_hyp = dx.segment(d, d);

        // a = H^T alpha
        const Vec d_alpha = cache.premise.states * da;
        d_states.noalias() += k.alpha * da.transpose();
        const double dot = k.alpha.dot(d_alpha);
        const Vec de = k.alpha.cwiseProduct((d_alpha.array() - dot).matrix());

        // e = S w_e, S = tanh(P + 1 q^T)
        store.grad(w_e_).vector().noalias() += k.scores.transpose() * de;
        const RowMatrix du = ((de * w_e.transpose()).array() * (1.0 - k.scores.array().square())).matrix();
        d_projected += du;
        const Vec dq = du.colwise().sum().transpose();

        store.grad(w_t_).matrix().noalias() += dq * k.h_hyp.transpose();
        store.grad(w_m_).matrix().noalias() += dq * k.h_prev.transpose();
        d_hyp.noalias() += w_t.transpose() * dq;
        dh_prev.noalias() += w_m.transpose() * dq;

        out.d_hypothesis[t] = std::move(d_hyp);
        dh_carry = std::move(dh_prev);
        dc_carry = std::move(dc_prev);
    }

    // P = H W_s^T
    store.grad(w_s_).matrix().noalias() += d_projected.transpose() * cache.premise.states;
    d_states.noalias() += d_projected * store.value(w_s_).matrix();

    out.d_premise.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) out.d_premise[static_cast<std::size_t>(j)] = d_states.row(j).transpose();
    out.d_c0 = std::move(dc_carry);
    return out;
}

} // namespace nligen
