#include "nligen/layers/hsoftmax.hpp"

#include <cmath>
#include <stdexcept>

#include "nligen/numerics/ops.hpp"

namespace nligen {

HierarchicalSoftmax::HierarchicalSoftmax(ParamStore& store, const std::string& prefix, std::size_t input,
                                         std::size_t vocab_size)
    : input_(input), vocab_(vocab_size) {
    if (vocab_size < 2) throw std::invalid_argument("HierarchicalSoftmax: vocabulary must have at least 2 words");
    const auto target_classes = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(vocab_size))));
    block_ = (vocab_size + target_classes - 1) / target_classes;
    classes_ = (vocab_size + block_ - 1) / block_;
    class_w_ = store.add(prefix + ".class_W", {classes_, input});
    class_b_ = store.add(prefix + ".class_b", {classes_});
    word_w_ = store.add(prefix + ".word_W", {vocab_size, input}, UpdateMode::RowSparse);
    word_b_ = store.add(prefix + ".word_b", {vocab_size}, UpdateMode::RowSparse);
}

std::pair<std::size_t, std::size_t> HierarchicalSoftmax::class_range(std::size_t cls) const {
    const std::size_t begin = cls * block_;
    return {begin, std::min(begin + block_, vocab_)};
}

void HierarchicalSoftmax::initialize(ParamStore& store, Rng& rng) const {
    glorot_uniform(store.value(class_w_), rng);
    store.value(class_b_).set_zero();
    for (std::size_t c = 0; c < classes_; ++c) {
        auto [begin, end] = class_range(c);
        glorot_uniform(store.value(word_w_), rng, begin, end);
    }
    store.value(word_b_).set_zero();
}

void HierarchicalSoftmax::check(const Vec& h) const {
    if (static_cast<std::size_t>(h.size()) != input_) {
        throw std::invalid_argument("HierarchicalSoftmax: input size " + std::to_string(h.size()) + ", expected " +
                                    std::to_string(input_));
    }
}

void HierarchicalSoftmax::check_target(std::size_t target) const {
    if (target >= vocab_) {
        throw std::out_of_range("HierarchicalSoftmax: word id " + std::to_string(target) + " outside vocabulary of " +
                                std::to_string(vocab_));
    }
}

Vec HierarchicalSoftmax::log_distribution(const ParamStore& store, const Vec& h) const {
    check(h);
    const Vec class_logits = store.value(class_w_).matrix() * h + store.value(class_b_).vector();
    const Vec class_lp = log_softmax(as_span(class_logits));
    const auto& ww = store.value(word_w_).matrix();
    const auto& wb = store.value(word_b_).vector();
    Vec out(static_cast<Eigen::Index>(vocab_));
    for (std::size_t c = 0; c < classes_; ++c) {
        auto [begin, end] = class_range(c);
        const auto b = static_cast<Eigen::Index>(begin);
        const auto n = static_cast<Eigen::Index>(end - begin);
        const Vec logits = ww.middleRows(b, n) * h + wb.segment(b, n);
        out.segment(b, n) = (log_softmax(as_span(logits)).array() + class_lp[static_cast<Eigen::Index>(c)]).matrix();
    }
    return out;
}

Vec HierarchicalSoftmax::distribution(const ParamStore& store, const Vec& h) const {
    return log_distribution(store, h).array().exp().matrix();
}

double HierarchicalSoftmax::log_prob(const ParamStore& store, const Vec& h, std::size_t target) const {
    check(h);
    check_target(target);
    const std::size_t c = class_of(target);
    auto [begin, end] = class_range(c);
    const auto b = static_cast<Eigen::Index>(begin);
    const auto n = static_cast<Eigen::Index>(end - begin);
    const Vec class_logits = store.value(class_w_).matrix() * h + store.value(class_b_).vector();
    const Vec word_logits = store.value(word_w_).matrix().middleRows(b, n) * h + store.value(word_b_).vector().segment(b, n);
    return log_softmax(as_span(class_logits))[static_cast<Eigen::Index>(c)] +
           log_softmax(as_span(word_logits))[static_cast<Eigen::Index>(target - begin)];
}

double HierarchicalSoftmax::nll_backward(ParamStore& store, const Vec& h, std::size_t target, double grad_scale,
                                         Vec& dh) const {
    check(h);
    check_target(target);
    const std::size_t c = class_of(target);
    auto [begin, end] = class_range(c);
    const auto b = static_cast<Eigen::Index>(begin);
    const auto n = static_cast<Eigen::Index>(end - begin);

    const auto class_w = store.value(class_w_).matrix();
    const auto word_w = store.value(word_w_).matrix().middleRows(b, n);
    const Vec class_logits = class_w * h + store.value(class_b_).vector();
    const Vec word_logits = word_w * h + store.value(word_b_).vector().segment(b, n);
    const Vec class_p = softmax(as_span(class_logits));
    const Vec word_p = softmax(as_span(word_logits));
    const auto ci = static_cast<Eigen::Index>(c);
    const auto wi = static_cast<Eigen::Index>(target - begin);
    const double nll = -(std::log(class_p[ci]) + std::log(word_p[wi]));

    // d(-log p)/d logits = p - onehot
    Vec d_class = class_p * grad_scale;
    d_class[ci] -= grad_scale;
    Vec d_word = word_p * grad_scale;
    d_word[wi] -= grad_scale;

    store.grad(class_w_).matrix().noalias() += d_class * h.transpose();
    store.grad(class_b_).vector() += d_class;
    store.grad(word_w_).matrix().middleRows(b, n).noalias() += d_word * h.transpose();
    store.grad(word_b_).vector().segment(b, n) += d_word;
    for (std::size_t r = begin; r < end; ++r) {
        store.touch_row(word_w_, r);
        store.touch_row(word_b_, r);
    }
    dh.noalias() = class_w.transpose() * d_class;
    dh.noalias() += word_w.transpose() * d_word;
    return nll;
}

} // namespace nligen
