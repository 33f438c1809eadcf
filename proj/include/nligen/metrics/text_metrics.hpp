#pragma once

#include <cstddef>
#include <span>

#include "nligen/data/example.hpp"

namespace nligen {

// All sentence-pair metrics strip <null> padding first.

// 1 - |A & B| / |A | B| over token sets; 0 when both are empty.
double jaccard_distance(std::span<const TokenId> premise, std::span<const TokenId> hypothesis);

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b);

// LCS F-measure with beta = 1; 0 if either side is empty.
double rouge_l(std::span<const TokenId> candidate, std::span<const TokenId> reference);

struct MeteorParams {
    double alpha = 0.9;
    double beta = 3.0;
    double gamma = 0.5;
};

struct MeteorAlignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

// Exact-match unigram alignment. Candidate tokens are taken left to right;
// each is matched to the reference occurrence directly after the previous
// match when that continues a chunk, else to the earliest unused occurrence.
MeteorAlignment meteor_align(std::span<const TokenId> candidate, std::span<const TokenId> reference);

// F_mean = P R / (alpha P + (1 - alpha) R), penalty = gamma (chunks / m)^beta,
// score = F_mean (1 - penalty). No stemming or synonym stages.
double meteor_lite(std::span<const TokenId> candidate, std::span<const TokenId> reference,
                   const MeteorParams& params = {});

} // namespace nligen
