#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "nligen/cli/cli.hpp"
#include "nligen/data/synthetic.hpp"
#include "nligen/data/vocab.hpp"
#include "nligen/io/checkpoint.hpp"
#include "nligen/io/hash.hpp"

using namespace nligen;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

void write_jsonl(const fs::path& p, const std::vector<TextExample>& ex) {
    std::ofstream f(p);
    for (const auto& e : ex) {
        nlohmann::json j;
        j["gold_label"] = std::string(to_string(e.label));
        j["sentence1"] = join_tokens(e.premise);
        j["sentence2"] = join_tokens(e.hypothesis);
        f << j.dump() << '\n';
    }
}

// Small corpus split into train/dev/test files under a fresh directory.
fs::path corpus_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("nligen_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto ex = make_attribute_corpus(150, 4);
    write_jsonl(dir / "train.jsonl", {ex.begin(), ex.begin() + 90});
    write_jsonl(dir / "dev.jsonl", {ex.begin() + 90, ex.begin() + 120});
    write_jsonl(dir / "test.jsonl", {ex.begin() + 120, ex.end()});
    return dir;
}

std::string s(const fs::path& p) { return p.string(); }

std::vector<std::string> train_clf_args(const fs::path& dir, const std::string& out) {
    return {"train-classifier", "--train", s(dir / "train.jsonl"), "--dev", s(dir / "dev.jsonl"), "--out",
            s(dir / out), "--hidden", "4", "--embed-dim", "6", "--max-epochs", "2", "--batch", "16"};
}

} // namespace

TEST(Cli, HelpExitsZeroAndShowsDefaults) {
    auto r = cli({"--help"});
    EXPECT_EQ(r.code, kExitOk);
    for (const char* sub : {"train-classifier", "train-generator", "generate", "filter", "evaluate", "discriminate",
                            "pipeline"})
        EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
    auto p = cli({"pipeline", "--help"});
    EXPECT_EQ(p.code, kExitOk);
    for (const char* d : {"[150]", "[8]", "[1]", "[20]", "[3]", "[64]", "0.0,0.3,0.6,0.9"})
        EXPECT_NE(p.out.find(d), std::string::npos) << d << "\n" << p.out;
    EXPECT_NE(p.out.find("--latent-dim"), std::string::npos);
    EXPECT_NE(p.out.find("--beam"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"no-such-command"}).code, kExitUsage);
    EXPECT_EQ(cli({"train-classifier"}).code, kExitUsage);
    EXPECT_EQ(cli({"train-classifier", "--train", "a", "--dev", "b", "--out", "c", "--hidden", "0"}).code, kExitUsage);
    auto r = cli({"pipeline", "--train", "a", "--dev", "b", "--test", "c", "--out", "d", "--model", "gan"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("gan"), std::string::npos);
    EXPECT_EQ(cli({"filter", "--dataset", "a", "--judge", "b", "--out", "c", "--threshold", "1.0"}).code, kExitUsage);
}

TEST(Cli, RuntimeErrorsExitTwo) {
    auto dir = fs::temp_directory_path() / "nligen_cli_missing";
    fs::remove_all(dir);
    auto r = cli({"train-classifier", "--train", s(dir / "none.jsonl"), "--dev", s(dir / "none.jsonl"), "--out",
                  s(dir / "c.nlig")});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
    auto dir = corpus_dir("config");
    {
        std::ofstream(dir / "cfg.json") << R"({"hidden": 3, "train-classifier": {"embed-dim": 5}, "evaluate": {"hidden": 99}})";
    }
    auto args = train_clf_args(dir, "a.nlig");
    // drop the explicit --hidden and --embed-dim so the config supplies them
    args.erase(args.begin() + 7, args.begin() + 11);
    args.insert(args.end(), {"--config", s(dir / "cfg.json")});
    ASSERT_EQ(cli(args).code, kExitOk);
    auto meta = read_model_meta(dir / "a.nlig");
    EXPECT_EQ(meta.hidden, 3u);
    auto ckpt = load_checkpoint(dir / "a.nlig");
    bool found = false;
    for (const auto& [name, t] : ckpt.tensors) {
        if (name == "embeddings") {
            EXPECT_EQ(t.dims()[1], 5u);
            found = true;
        }
    }
    EXPECT_TRUE(found);

    args.insert(args.end(), {"--hidden", "6", "--out", s(dir / "b.nlig")});
    ASSERT_EQ(cli(args).code, kExitOk);
    EXPECT_EQ(read_model_meta(dir / "b.nlig").hidden, 6u);

    std::ofstream(dir / "bad.json") << "{not json";
    args.back() = s(dir / "c.nlig");
    args.insert(args.end(), {"--config", s(dir / "bad.json")});
    EXPECT_EQ(cli(args).code, kExitUsage);
}

TEST(Cli, EndToEndCommandsAreByteIdenticalOnRerun) {
    auto dir = corpus_dir("e2e");
    auto run_all = [&](const std::string& tag) {
        ASSERT_EQ(cli(train_clf_args(dir, "judge-" + tag + ".nlig")).code, kExitOk);
        ASSERT_EQ(cli({"train-generator", "--train", s(dir / "train.jsonl"), "--out", s(dir / ("gen-" + tag + ".nlig")),
                       "--vocab", s(dir / "vocab.txt"), "--hidden", "4", "--embed-dim", "6", "--latent-dim", "2",
                       "--epochs", "1", "--batch", "16"})
                      .code,
                  kExitOk);
        ASSERT_EQ(cli({"generate", "--checkpoint", s(dir / ("gen-" + tag + ".nlig")), "--source", s(dir / "dev.jsonl"),
                       "--out", s(dir / ("gen-" + tag + ".jsonl")), "--vocab", s(dir / "vocab.txt"), "--oversample",
                       "2", "--workers", tag == "a" ? "1" : "2"})
                      .code,
                  kExitOk);
        ASSERT_EQ(cli({"filter", "--dataset", s(dir / ("gen-" + tag + ".jsonl")), "--judge",
                       s(dir / ("judge-" + tag + ".nlig")), "--out", s(dir / ("filt-" + tag + ".jsonl")), "--vocab",
                       s(dir / "vocab.txt"), "--threshold", "0.3"})
                      .code,
                  kExitOk);
        auto ev = cli({"evaluate", "--dataset", s(dir / ("gen-" + tag + ".jsonl")), "--judge",
                       s(dir / ("judge-" + tag + ".nlig")), "--vocab", s(dir / "vocab.txt"), "--reference",
                       s(dir / "dev.jsonl")});
        ASSERT_EQ(ev.code, kExitOk) << ev.err;
        std::ofstream(dir / ("eval-" + tag + ".json")) << ev.out;
    };
    run_all("a");
    run_all("b");
    for (const char* stem : {"judge-%.nlig", "gen-%.nlig", "gen-%.jsonl", "filt-%.jsonl"}) {
        std::string a = stem, b = stem;
        a.replace(a.find('%'), 1, "a");
        b.replace(b.find('%'), 1, "b");
        EXPECT_EQ(file_sha1(dir / a), file_sha1(dir / b)) << stem;
    }
    // the report names its input file, otherwise identical
    std::string eval_b = read_file(dir / "eval-b.json");
    eval_b.replace(eval_b.find("gen-b.jsonl"), 11, "gen-a.jsonl");
    EXPECT_EQ(read_file(dir / "eval-a.json"), eval_b);
    auto report = nlohmann::json::parse(read_file(dir / "eval-a.json"));
    EXPECT_TRUE(report.contains("rows"));
    const std::string gen = read_file(dir / "gen-a.jsonl");
    EXPECT_EQ(std::count(gen.begin(), gen.end(), '\n'), 60);
}

TEST(Cli, GenerateRefusesVocabMismatch) {
    auto dir = corpus_dir("vocab");
    ASSERT_EQ(cli({"train-generator", "--train", s(dir / "train.jsonl"), "--out", s(dir / "g.nlig"), "--hidden", "3",
                   "--embed-dim", "4", "--latent-dim", "2", "--epochs", "1"})
                  .code,
              kExitOk);
    auto v = Vocab::from_tokens({"<null>", "<oov>", "zebra"});
    v.save(dir / "other_vocab.txt");
    auto r = cli({"generate", "--checkpoint", s(dir / "g.nlig"), "--source", s(dir / "dev.jsonl"), "--out",
                  s(dir / "o.jsonl"), "--vocab", s(dir / "other_vocab.txt")});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find(hash_hex(v.hash())), std::string::npos) << r.err;
}

TEST(Cli, PipelineSubcommandWritesReport) {
    auto dir = corpus_dir("pipe");
    auto r = cli({"pipeline", "--train", s(dir / "train.jsonl"), "--dev", s(dir / "dev.jsonl"), "--test",
                  s(dir / "test.jsonl"), "--out", s(dir / "run"), "--hidden", "3", "--embed-dim", "4", "--latent-dim",
                  "2", "--thresholds", "0.0", "--epochs", "1", "--max-epochs", "1", "--disc-epochs", "1",
                  "--allow-undersized"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "run" / "reports" / "report.json"));
    EXPECT_NE(r.out.find("att-embed"), std::string::npos);
}
