// Writes train/dev/test JSONL splits of the rule-generated attribute corpus
// and vectors.txt, unit-normal word vectors standing in for pretrained ones.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nligen/data/synthetic.hpp"
#include "nligen/data/vocab.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Write a synthetic NLI corpus as train.jsonl, dev.jsonl and test.jsonl", "make_toy_corpus"};
    app.option_defaults()->always_capture_default();
    std::size_t train = 2400, dev = 300, test = 300, dim = 50;
    std::uint64_t seed = 1;
    std::string out = ".";
    app.add_option("--train", train, "Training examples");
    app.add_option("--dev", dev, "Development examples");
    app.add_option("--test", test, "Test examples");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--dim", dim, "Word vector size")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        const auto all = nligen::make_attribute_corpus(train + dev + test, seed);
        std::filesystem::create_directories(out);
        const std::pair<const char*, std::pair<std::size_t, std::size_t>> splits[] = {
            {"train.jsonl", {0, train}}, {"dev.jsonl", {train, train + dev}}, {"test.jsonl", {train + dev, all.size()}}};
        for (const auto& [name, range] : splits) {
            std::ofstream f(std::filesystem::path(out) / name, std::ios::binary | std::ios::trunc);
            for (std::size_t i = range.first; i < range.second; ++i) {
                nlohmann::json j;
                j["gold_label"] = std::string(nligen::to_string(all[i].label));
                j["sentence1"] = nligen::join_tokens(all[i].premise);
                j["sentence2"] = nligen::join_tokens(all[i].hypothesis);
                f << j.dump() << '\n';
            }
            if (!f) throw std::runtime_error(std::string("cannot write ") + name);
        }
        nligen::write_unit_vectors(std::filesystem::path(out) / "vectors.txt", all, seed, dim);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
