#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nligen/data/example.hpp"

namespace nligen {

inline constexpr std::string_view kNullToken = "<null>";
inline constexpr std::string_view kOovToken = "<oov>";

// Lowercases ASCII, splits on whitespace and splits off . , ! ? ; : " ( )
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

// Token list where index = id. Ids 0 and 1 are <null> and <oov>; the rest are
// sorted by descending corpus frequency, ties broken lexicographically.
class Vocab {
public:
    Vocab();

    // Tokens with count < min_count map to <oov>; their total count becomes
    // the <oov> frequency.
    static Vocab build(std::span<const std::vector<std::string>> sentences, std::size_t min_count = 1);
    static Vocab from_tokens(std::vector<std::string> tokens);
    static Vocab load(const std::filesystem::path& path);

    std::size_t size() const { return tokens_.size(); }
    TokenId id(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string& token(TokenId id) const { return tokens_.at(id); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    // Corpus frequency; zero when loaded from a file.
    std::uint64_t count(TokenId id) const { return counts_.at(id); }

    TokenIds encode(std::span<const std::string> tokens) const;
    std::vector<std::string> decode(std::span<const TokenId> ids) const; // padding stripped
    std::string text(std::span<const TokenId> ids) const { auto t = decode(ids); return join_tokens(t); }

    // Vocab file bytes: one token per line, '\n' terminated.
    std::string serialize() const;
    void save(const std::filesystem::path& path) const;
    // FNV-1a 64 of serialize().
    std::uint64_t hash() const;

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, TokenId> index_;
};

std::string hash_hex(std::uint64_t h);

} // namespace nligen
