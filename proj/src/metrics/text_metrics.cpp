#include "nligen/metrics/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

namespace nligen {

double jaccard_distance(std::span<const TokenId> premise, std::span<const TokenId> hypothesis) {
    const auto p = strip_padding(premise);
    const auto h = strip_padding(hypothesis);
    const std::set<TokenId> a(p.begin(), p.end());
    const std::set<TokenId> b(h.begin(), h.end());
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (TokenId t : a) inter += b.count(t);
    const std::size_t uni = a.size() + b.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(std::span<const TokenId> candidate, std::span<const TokenId> reference) {
    const auto c = strip_padding(candidate);
    const auto r = strip_padding(reference);
    if (c.empty() || r.empty()) return 0.0;
    const auto lcs = static_cast<double>(lcs_length(c, r));
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(c.size());
    const double rec = lcs / static_cast<double>(r.size());
    return 2.0 * p * rec / (p + rec);
}

MeteorAlignment meteor_align(std::span<const TokenId> candidate, std::span<const TokenId> reference) {
    const auto c = strip_padding(candidate);
    const auto r = strip_padding(reference);
    std::vector<bool> used(r.size(), false);
    MeteorAlignment out;
    std::optional<std::size_t> last; // reference position of the previous candidate's match
    for (TokenId tok : c) {
        std::optional<std::size_t> pos;
        if (last && *last + 1 < r.size() && !used[*last + 1] && r[*last + 1] == tok) {
            pos = *last + 1;
        } else {
            for (std::size_t j = 0; j < r.size(); ++j) {
                if (!used[j] && r[j] == tok) {
                    pos = j;
                    break;
                }
            }
        }
        if (!pos) {
            last.reset();
            continue;
        }
        used[*pos] = true;
        ++out.matches;
        if (!last || *pos != *last + 1) ++out.chunks;
        last = pos;
    }
    return out;
}

double meteor_lite(std::span<const TokenId> candidate, std::span<const TokenId> reference, const MeteorParams& params) {
    const auto c = strip_padding(candidate);
    const auto r = strip_padding(reference);
    const MeteorAlignment a = meteor_align(c, r);
    if (a.matches == 0) return 0.0;
    const double m = static_cast<double>(a.matches);
    const double p = m / static_cast<double>(c.size());
    const double rec = m / static_cast<double>(r.size());
    const double f_mean = p * rec / (params.alpha * p + (1.0 - params.alpha) * rec);
    const double penalty = params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
    return f_mean * (1.0 - penalty);
}

} // namespace nligen
