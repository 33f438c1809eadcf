#include "nligen/data/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "nligen/numerics/random.hpp"

namespace nligen {

namespace {

bool is_split_punct(char c) {
    switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':': case '"': case '(': case ')':
        return true;
    default:
        return false;
    }
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
    };
    for (char c : text) {
        if (is_space(c)) {
            flush();
        } else if (is_split_punct(c)) {
            flush();
            out.emplace_back(1, c);
        } else {
            const auto uc = static_cast<unsigned char>(c);
            current.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
        }
    }
    flush();
    return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

Vocab::Vocab() : tokens_{std::string(kNullToken), std::string(kOovToken)}, counts_{0, 0} {
    index_.emplace(tokens_[0], kNullId);
    index_.emplace(tokens_[1], kOovId);
}

Vocab Vocab::build(std::span<const std::vector<std::string>> sentences, std::size_t min_count) {
    std::map<std::string, std::uint64_t> freq;
    for (const auto& s : sentences) {
        for (const auto& tok : s) {
            if (tok == kNullToken || tok == kOovToken) continue;
            ++freq[tok];
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> entries(freq.begin(), freq.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocab v;
    for (auto& [tok, n] : entries) {
        if (n < min_count) {
            v.counts_[kOovId] += n;
            continue;
        }
        v.index_.emplace(tok, static_cast<TokenId>(v.tokens_.size()));
        v.tokens_.push_back(tok);
        v.counts_.push_back(n);
    }
    return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < 2 || tokens[0] != kNullToken || tokens[1] != kOovToken) {
        throw std::invalid_argument("vocab must start with <null> and <oov>");
    }
    Vocab v;
    v.tokens_.clear();
    v.counts_.clear();
    v.index_.clear();
    for (auto& tok : tokens) {
        if (!v.index_.emplace(tok, static_cast<TokenId>(v.tokens_.size())).second) {
            throw std::invalid_argument("duplicate vocab token: " + tok);
        }
        v.tokens_.push_back(std::move(tok));
        v.counts_.push_back(0);
    }
    return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open vocab file " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    return from_tokens(std::move(tokens));
}

TokenId Vocab::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kOovId : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

TokenIds Vocab::encode(std::span<const std::string> tokens) const {
    TokenIds ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

std::vector<std::string> Vocab::decode(std::span<const TokenId> ids) const {
    std::vector<std::string> out;
    for (TokenId t : strip_padding(ids)) out.push_back(token(t));
    return out;
}

std::string Vocab::serialize() const {
    std::string out;
    for (const auto& t : tokens_) {
        out += t;
        out.push_back('\n');
    }
    return out;
}

void Vocab::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write vocab file " + path.string());
    out << serialize();
    if (!out) throw std::runtime_error("failed writing vocab file " + path.string());
}

std::uint64_t Vocab::hash() const { return fnv1a64(serialize()); }

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace nligen
