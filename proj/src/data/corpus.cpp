#include "nligen/data/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "nligen/numerics/random.hpp"

namespace nligen {

using nlohmann::json;

namespace {

std::string line_error(const std::string& source, std::size_t line_no, const std::string& what) {
    return source + ":" + std::to_string(line_no) + ": " + what;
}

const std::string& require_string(const json& obj, const char* key, const std::string& source, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw std::runtime_error(line_error(source, line_no, std::string("missing string field '") + key + "'"));
    }
    return it->get_ref<const std::string&>();
}

} // namespace

LoadedCorpus parse_corpus(std::istream& in, const SequenceLimits& limits, const std::string& source) {
    LoadedCorpus out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(line_error(source, line_no, std::string("malformed JSON: ") + e.what()));
        }
        if (!obj.is_object()) throw std::runtime_error(line_error(source, line_no, "expected a JSON object"));
        ++out.stats.lines;

        const std::string& gold = require_string(obj, "gold_label", source, line_no);
        if (gold == "-") {
            ++out.stats.unlabeled;
            continue;
        }
        TextExample ex;
        try {
            ex.label = label_from_string(gold);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(line_error(source, line_no, e.what()));
        }
        ex.premise = tokenize(require_string(obj, "sentence1", source, line_no));
        ex.hypothesis = tokenize(require_string(obj, "sentence2", source, line_no));
        if (ex.premise.size() > limits.premise || ex.hypothesis.size() > limits.hypothesis) {
            ++out.stats.too_long;
            continue;
        }
        if (auto it = obj.find("origin_index"); it != obj.end() && it->is_number_unsigned()) {
            ex.origin_index = it->get<std::size_t>();
        }
        if (auto it = obj.find("gen_logprob"); it != obj.end() && it->is_number()) {
            ex.gen_logprob = it->get<double>();
        }
        out.examples.push_back(std::move(ex));
        ++out.stats.kept;
    }
    return out;
}

LoadedCorpus load_corpus(const std::filesystem::path& path, const SequenceLimits& limits) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus " + path.string());
    return parse_corpus(in, limits, path.string());
}

std::vector<std::vector<std::string>> corpus_sentences(const std::vector<TextExample>& examples) {
    std::vector<std::vector<std::string>> out;
    out.reserve(2 * examples.size());
    for (const auto& ex : examples) {
        out.push_back(ex.premise);
        out.push_back(ex.hypothesis);
    }
    return out;
}

Example encode_example(const TextExample& ex, const Vocab& vocab, const SequenceLimits& limits) {
    Example out;
    out.premise = pad_to(vocab.encode(ex.premise), limits.premise);
    out.hypothesis = pad_to(vocab.encode(ex.hypothesis), limits.hypothesis);
    out.label = ex.label;
    out.origin_index = ex.origin_index;
    out.gen_logprob = ex.gen_logprob;
    return out;
}

Dataset encode_corpus(const std::vector<TextExample>& examples, const Vocab& vocab, const SequenceLimits& limits) {
    Dataset d;
    d.vocab_hash = vocab.hash();
    d.examples.reserve(examples.size());
    for (const auto& ex : examples) d.examples.push_back(encode_example(ex, vocab, limits));
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, const Vocab& vocab, const SequenceLimits& limits,
                     CorpusStats* stats) {
    LoadedCorpus c = load_corpus(path, limits);
    if (stats) *stats = c.stats;
    return encode_corpus(c.examples, vocab, limits);
}

std::string example_to_json_line(const Example& ex, const Vocab& vocab) {
    json obj = json::object();
    obj["gold_label"] = std::string(to_string(ex.label));
    obj["sentence1"] = vocab.text(ex.premise);
    obj["sentence2"] = vocab.text(ex.hypothesis);
    if (ex.origin_index) obj["origin_index"] = *ex.origin_index;
    if (ex.gen_logprob) obj["gen_logprob"] = *ex.gen_logprob;
    return obj.dump();
}

void write_dataset(const std::filesystem::path& path, const Dataset& data, const Vocab& vocab) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write dataset " + path.string());
    for (const auto& ex : data.examples) out << example_to_json_line(ex, vocab) << '\n';
    if (!out) throw std::runtime_error("failed writing dataset " + path.string());
}

Tensor random_embeddings(const Vocab& vocab, std::uint64_t seed, std::size_t dim) {
    Tensor emb({vocab.size(), dim});
    Rng rng(seed);
    for (double& v : emb.values()) v = rng.normal(0.0, kUnknownEmbeddingStd);
    for (double& v : emb.row(kNullId)) v = 0.0;
    return emb;
}

Tensor load_embeddings(const std::filesystem::path& path, const Vocab& vocab, std::uint64_t seed, std::size_t dim) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embeddings " + path.string());
    Tensor emb = random_embeddings(vocab, seed, dim);
    std::unordered_set<TokenId> seen;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string word;
        if (!(ss >> word)) continue;
        std::vector<double> values;
        double v;
        while (ss >> v) values.push_back(v);
        if (values.size() != dim) {
            throw std::runtime_error("embedding for '" + word + "' has " + std::to_string(values.size()) +
                                     " values, expected " + std::to_string(dim));
        }
        if (!vocab.contains(word)) continue;
        const TokenId id = vocab.id(word);
        if (id == kNullId || !seen.insert(id).second) continue;
        std::copy(values.begin(), values.end(), emb.row(id).begin());
    }
    return emb;
}

} // namespace nligen
