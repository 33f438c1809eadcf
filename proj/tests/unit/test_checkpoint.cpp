#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "nligen/io/checkpoint.hpp"
#include "nligen/data/vocab.hpp"
#include "nligen/io/hash.hpp"
#include "test_util.hpp"

using namespace nligen;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("nligen_ckpt_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Tensor embeddings(std::size_t V, std::size_t e, std::uint64_t seed) {
    Tensor t({V, e});
    Rng rng(seed);
    for (std::size_t r = 1; r < V; ++r) {
        for (std::size_t c = 0; c < e; ++c) t.at(r, c) = 0.3 * rng.normal();
    }
    return t;
}

Example random_example(Rng& rng, std::size_t V) {
    TokenIds p, h;
    for (std::size_t i = 0, n = 1 + rng.below(10); i < n; ++i) p.push_back(static_cast<TokenId>(2 + rng.below(V - 2)));
    for (std::size_t i = 0, n = rng.below(8); i < n; ++i) h.push_back(static_cast<TokenId>(2 + rng.below(V - 2)));
    return {pad_to(p, 25), pad_to(h, 15), kAllLabels[rng.below(3)], {}, {}};
}

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.tensors.emplace_back("a", Tensor({2, 2}, std::vector<double>{1.0, -2.5, 1.0 / 3.0, 1e-300}));
    c.tensors.emplace_back("b", Tensor({3}, std::vector<double>{0.1, 0.2, 0.3}));
    c.metadata = {{"kind", "test"}, {"seed", 5}};
    return c;
}

CheckpointErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const CheckpointError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no CheckpointError thrown";
    return CheckpointErrorCode::Io;
}

} // namespace

TEST(Checkpoint, EncodeDecodeBitExact) {
    auto c = sample_checkpoint();
    auto back = decode_checkpoint(encode_checkpoint(c));
    ASSERT_EQ(back.tensors.size(), 2u);
    EXPECT_EQ(back.tensors[0].first, "a");
    EXPECT_EQ(back.tensors[0].second, c.tensors[0].second);
    EXPECT_EQ(back.tensors[1].second, c.tensors[1].second);
    EXPECT_EQ(back.metadata, c.metadata);
    EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(c));
}

TEST(Checkpoint, ExplicitByteLayout) {
    Checkpoint c;
    c.tensors.emplace_back("w", Tensor({1}, std::vector<double>{1.0}));
    const std::string bytes = encode_checkpoint(c, Dtype::F32);
    const std::string expected = std::string("NLIGEN01") + std::string("\x01\x00\x00\x00", 4) +
                                 std::string("\x01\x00", 2) + "w" + std::string("\x00\x01", 2) +
                                 std::string("\x01\x00\x00\x00", 4) + std::string("\x00\x00\x80\x3f", 4) +
                                 std::string("\x02\x00\x00\x00", 4) + "{}";
    EXPECT_EQ(bytes, expected);
}

TEST(Checkpoint, WrongMagicAndVersion) {
    std::string bytes = encode_checkpoint(sample_checkpoint());
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_EQ(code_of([&] { decode_checkpoint(bad); }), CheckpointErrorCode::NotACheckpoint);
    EXPECT_EQ(code_of([&] { decode_checkpoint("hello"); }), CheckpointErrorCode::NotACheckpoint);
    std::string v2 = bytes;
    v2[7] = '2';
    EXPECT_EQ(code_of([&] { decode_checkpoint(v2); }), CheckpointErrorCode::Version);
}

TEST(Checkpoint, TruncationReportsOffset) {
    const std::string bytes = encode_checkpoint(sample_checkpoint());
    for (std::size_t len = kMagicSize; len < bytes.size(); ++len) {
        try {
            decode_checkpoint(bytes.substr(0, len));
            FAIL() << "length " << len;
        } catch (const CheckpointError& e) {
            EXPECT_EQ(e.code(), CheckpointErrorCode::Truncated) << len;
            ASSERT_TRUE(e.offset().has_value());
            EXPECT_LE(*e.offset(), len);
            EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
        }
    }
    EXPECT_EQ(code_of([&] { decode_checkpoint(bytes + "x"); }), CheckpointErrorCode::Malformed);
}

TEST(Checkpoint, TruncatedFileOnDisk) {
    auto dir = temp_dir("trunc");
    save_checkpoint(sample_checkpoint(), dir / "c.nlig");
    const std::string bytes = read_file(dir / "c.nlig");
    write_file_atomic(dir / "c.nlig", bytes.substr(0, bytes.size() / 2));
    EXPECT_EQ(code_of([&] { load_checkpoint(dir / "c.nlig"); }), CheckpointErrorCode::Truncated);
    EXPECT_EQ(code_of([&] { load_checkpoint(dir / "missing.nlig"); }), CheckpointErrorCode::Io);
}

TEST(Checkpoint, AtomicSaveLeavesNoTempFile) {
    auto dir = temp_dir("atomic");
    save_checkpoint(sample_checkpoint(), dir / "c.nlig");
    save_checkpoint(sample_checkpoint(), dir / "c.nlig");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        (void)e;
        ++files;
    }
    EXPECT_EQ(files, 1u);
}

TEST(Checkpoint, Float32WithinOneMillionth) {
    Checkpoint c;
    Tensor t({50});
    Rng rng(3);
    for (std::size_t i = 0; i < 50; ++i) t[i] = std::exp(6 * rng.normal());
    c.tensors.emplace_back("t", t);
    auto back = decode_checkpoint(encode_checkpoint(c, Dtype::F32));
    for (std::size_t i = 0; i < 50; ++i) {
        EXPECT_LE(std::abs(back.tensors[0].second[i] - t[i]), 1e-6 * std::abs(t[i]));
    }
}

TEST(Checkpoint, CommittedFixturesDecode) {
    const fs::path dir = NLIGEN_FIXTURE_DIR;
    for (const char* name : {"tiny_f64.nlig", "tiny_f32.nlig"}) {
        auto c = load_checkpoint(dir / name);
        ASSERT_EQ(c.tensors.size(), 3u) << name;
        EXPECT_EQ(c.tensors[0].first, "layer.W");
        EXPECT_EQ(c.tensors[0].second.dims(), (std::vector<std::size_t>{2, 3}));
        EXPECT_EQ(c.tensors[2].second.dims(), (std::vector<std::size_t>{1, 1, 4}));
        const std::vector<double> w{0.5, -1.25, 3.0, 1e-3, -7.75, std::ldexp(1.0, -20)};
        for (std::size_t i = 0; i < w.size(); ++i) {
            EXPECT_NEAR(c.tensors[0].second[i], w[i], 1e-6 * std::abs(w[i])) << name << " " << i;
        }
        EXPECT_EQ(c.tensors[1].second[1], -0.0625);
        EXPECT_EQ(c.metadata.at("seed"), 42);
        EXPECT_EQ(c.metadata.at("vocab_hash"), "00000000deadbeef");
    }
    auto f64 = load_checkpoint(dir / "tiny_f64.nlig");
    EXPECT_EQ(f64.tensors[0].second[3], 1e-3);
    EXPECT_EQ(encode_checkpoint(f64, Dtype::F64), read_file(dir / "tiny_f64.nlig"));
    EXPECT_EQ(encode_checkpoint(load_checkpoint(dir / "tiny_f32.nlig"), Dtype::F32), read_file(dir / "tiny_f32.nlig"));
}

TEST(ModelCheckpoint, ClassifierRoundTripSameOutputs) {
    auto dir = temp_dir("clf");
    Classifier c(embeddings(12, 5, 1), ClassifierConfig{6, {}}, 1);
    Rng rng(2);
    test::randomize(c.params(), rng);
    save_classifier(c, ModelInfo{0xabcdef, 9, 3}, dir / "c.nlig");
    ModelMeta meta;
    Classifier back = load_classifier(dir / "c.nlig", 0xabcdef, &meta);
    EXPECT_EQ(meta.kind, "classifier");
    EXPECT_EQ(meta.hidden, 6u);
    EXPECT_EQ(meta.seed, 9u);
    EXPECT_EQ(meta.epochs_trained, 3u);
    for (int i = 0; i < 10; ++i) {
        auto ex = random_example(rng, 12);
        EXPECT_EQ(c.classify(ex), back.classify(ex));
    }
    for (std::size_t k = 0; k < c.params().size(); ++k) EXPECT_EQ(c.params().value(k), back.params().value(k));
}

TEST(ModelCheckpoint, GeneratorRoundTripAllKinds) {
    auto dir = temp_dir("gen");
    Rng rng(3);
    for (auto kind : {GeneratorKind::AttEmbed, GeneratorKind::BaseEmbed, GeneratorKind::EncDec,
                      GeneratorKind::VaeEncDec}) {
        GeneratorConfig cfg;
        cfg.kind = kind;
        cfg.hidden = 5;
        cfg.latent = 3;
        cfg.table_rows = uses_latent_table(kind) ? 7 : 0;
        Generator g(embeddings(12, 4, 1), cfg, 1);
        test::randomize(g.params(), rng);
        g.set_latent_sigma(Vec::Constant(3, 0.4));
        const auto path = dir / (std::string(to_string(kind)) + ".nlig");
        save_generator(g, ModelInfo{7, 1, 20}, path);
        Generator back = load_generator(path, 7);
        EXPECT_EQ(back.kind(), kind);
        EXPECT_EQ(back.latent_sigma(), g.latent_sigma());
        Vec eps = test::random_vec(rng, 3);
        for (int i = 0; i < 10; ++i) {
            auto ex = random_example(rng, 12);
            EXPECT_EQ(g.loss(ex, i % 7, &eps).total(), back.loss(ex, i % 7, &eps).total());
        }
    }
}

TEST(ModelCheckpoint, DiscriminatorRoundTripAndF32) {
    auto dir = temp_dir("disc");
    Discriminator d(embeddings(12, 4, 1), DiscriminatorConfig{5, 15}, 1);
    Rng rng(4);
    test::randomize(d.params(), rng);
    save_discriminator(d, ModelInfo{1, 1, 5}, dir / "d64.nlig");
    save_discriminator(d, ModelInfo{1, 1, 5}, dir / "d32.nlig", Dtype::F32);
    Discriminator d64 = load_discriminator(dir / "d64.nlig");
    Discriminator d32 = load_discriminator(dir / "d32.nlig");
    for (int i = 0; i < 10; ++i) {
        auto h = random_example(rng, 12).hypothesis;
        EXPECT_EQ(d.score(h), d64.score(h));
        EXPECT_NEAR(d.score(h), d32.score(h), 1e-5);
    }
    for (std::size_t k = 0; k < d.params().size(); ++k) {
        const auto& a = d.params().value(k);
        const auto& b = d32.params().value(k);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1e-6 * std::abs(a[i]) + 1e-300);
    }
}

TEST(ModelCheckpoint, VocabMismatchNamesBothHashes) {
    auto dir = temp_dir("vocab");
    Classifier c(embeddings(8, 3, 1), ClassifierConfig{4, {}}, 1);
    save_classifier(c, ModelInfo{0x1111, 1, 1}, dir / "c.nlig");
    try {
        load_classifier(dir / "c.nlig", 0x2222);
        FAIL();
    } catch (const CheckpointError& e) {
        EXPECT_EQ(e.code(), CheckpointErrorCode::VocabMismatch);
        const std::string msg = e.what();
        EXPECT_NE(msg.find(hash_hex(0x1111)), std::string::npos) << msg;
        EXPECT_NE(msg.find(hash_hex(0x2222)), std::string::npos) << msg;
    }
}

TEST(ModelCheckpoint, WrongModelKindRefused) {
    auto dir = temp_dir("kind");
    Discriminator d(embeddings(8, 3, 1), DiscriminatorConfig{4, 15}, 1);
    save_discriminator(d, ModelInfo{}, dir / "d.nlig");
    EXPECT_EQ(code_of([&] { load_classifier(dir / "d.nlig"); }), CheckpointErrorCode::ModelMismatch);
}

TEST(ModelCheckpoint, MetadataCarriesRequiredFields) {
    auto dir = temp_dir("meta");
    GeneratorConfig cfg;
    cfg.hidden = 4;
    cfg.latent = 2;
    cfg.table_rows = 3;
    Generator g(embeddings(8, 3, 1), cfg, 1);
    save_generator(g, ModelInfo{0xfeed, 77, 20}, dir / "g.nlig");
    auto ckpt = load_checkpoint(dir / "g.nlig");
    for (const char* key : {"kind", "d", "z", "vocab_hash", "seed", "epochs_trained"}) {
        EXPECT_TRUE(ckpt.metadata.contains(key)) << key;
    }
    EXPECT_EQ(ckpt.metadata.at("kind"), "att-embed");
    EXPECT_EQ(ckpt.metadata.at("vocab_hash"), hash_hex(0xfeed));
    EXPECT_EQ(read_model_meta(dir / "g.nlig").seed, 77u);
}

TEST(Hash, GitBlobSha1) {
    EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}
