#pragma once

#include <span>
#include <vector>

#include "nligen/data/example.hpp"
#include "nligen/numerics/tensor.hpp"

namespace nligen {

// Embedding rows for each token id.
std::vector<Vec> embed_tokens(const Tensor& embeddings, std::span<const TokenId> ids);
Vec label_vector(Label label);
// [a, b, ...] concatenation.
Vec concat(std::initializer_list<const Vec*> parts);

} // namespace nligen
