#include "nligen/models/common.hpp"

#include <stdexcept>

namespace nligen {

std::vector<Vec> embed_tokens(const Tensor& embeddings, std::span<const TokenId> ids) {
    std::vector<Vec> out;
    out.reserve(ids.size());
    const auto dim = static_cast<Eigen::Index>(embeddings.cols());
    for (TokenId id : ids) {
        if (id >= embeddings.rows()) {
            throw std::out_of_range("token id " + std::to_string(id) + " outside embedding table of " +
                                    std::to_string(embeddings.rows()));
        }
        out.emplace_back(Eigen::Map<const Vec>(embeddings.row(id).data(), dim));
    }
    return out;
}

Vec label_vector(Label label) {
    Vec v = Vec::Zero(kLabelCount);
    v[static_cast<Eigen::Index>(label_index(label))] = 1.0;
    return v;
}

Vec concat(std::initializer_list<const Vec*> parts) {
    Eigen::Index n = 0;
    for (const Vec* p : parts) n += p->size();
    Vec out(n);
    Eigen::Index at = 0;
    for (const Vec* p : parts) {
        out.segment(at, p->size()) = *p;
        at += p->size();
    }
    return out;
}

} // namespace nligen
