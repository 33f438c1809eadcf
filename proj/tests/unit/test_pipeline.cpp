#include <algorithm>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "nligen/data/synthetic.hpp"
#include "nligen/data/vocab.hpp"
#include "nligen/io/checkpoint.hpp"
#include "nligen/io/hash.hpp"
#include "nligen/metrics/dataset_metrics.hpp"
#include "nligen/pipeline/dataset_ops.hpp"
#include "nligen/pipeline/run.hpp"
#include "nligen/pipeline/train.hpp"
#include "test_util.hpp"

using namespace nligen;
namespace fs = std::filesystem;

namespace {

struct Toy {
    Vocab vocab;
    Tensor emb;
    Dataset train, dev, test;
};

const Toy& toy() {
    static const Toy t = [] {
        Toy t;
        auto ex = make_attribute_corpus(420, 11);
        std::vector<TextExample> tr(ex.begin(), ex.begin() + 300), dv(ex.begin() + 300, ex.begin() + 360),
            te(ex.begin() + 360, ex.end());
        auto sentences = corpus_sentences(tr);
        t.vocab = Vocab::build(sentences);
        t.emb = random_embeddings(t.vocab, 3, 10);
        t.train = encode_corpus(tr, t.vocab, {});
        t.dev = encode_corpus(dv, t.vocab, {});
        t.test = encode_corpus(te, t.vocab, {});
        return t;
    }();
    return t;
}

TrainConfig small_train(std::size_t epochs = 3) {
    TrainConfig c;
    c.epochs = epochs;
    c.max_epochs = epochs;
    c.batch_size = 16;
    c.seed = 5;
    return c;
}

Example labeled(Label l, TokenId tok) { return {pad_to({tok}, 25), pad_to({tok}, 15), l, {}, {}}; }

Dataset with_labels(const std::vector<Label>& labels) {
    Dataset d;
    d.vocab_hash = 1;
    for (std::size_t i = 0; i < labels.size(); ++i) d.examples.push_back(labeled(labels[i], static_cast<TokenId>(2 + i % 50)));
    return d;
}

Dataset counts(std::size_t e, std::size_t c, std::size_t n) {
    std::vector<Label> labels;
    // interleave so order preservation is visible
    for (std::size_t i = 0; i < std::max({e, c, n}); ++i) {
        if (i < e) labels.push_back(Label::Entailment);
        if (i < c) labels.push_back(Label::Contradiction);
        if (i < n) labels.push_back(Label::Neutral);
    }
    return with_labels(labels);
}

std::array<std::size_t, 3> histogram(const Dataset& d) {
    std::array<std::size_t, 3> h{};
    for (const auto& ex : d.examples) ++h[label_index(ex.label)];
    return h;
}

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("nligen_pipe_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST(EarlyStopping, FlatLossStopsAfterPatience) {
    EarlyStopping es(3);
    std::size_t epoch = 0;
    while (!es.should_stop()) {
        ++epoch;
        es.update(1.0);
    }
    EXPECT_EQ(epoch, 4u);
    EXPECT_EQ(es.best_epoch(), 1u);
}

TEST(EarlyStopping, StrictImprovementNeverStops) {
    EarlyStopping es(3);
    for (int i = 0; i < 100; ++i) {
        EXPECT_TRUE(es.update(100.0 - i));
        EXPECT_FALSE(es.should_stop());
    }
    EXPECT_EQ(es.best_epoch(), 100u);
}

TEST(EarlyStopping, ResetsOnImprovement) {
    EarlyStopping es(2);
    es.update(5);
    es.update(6);
    EXPECT_TRUE(es.update(4));
    es.update(4);
    EXPECT_FALSE(es.should_stop());
    es.update(7);
    EXPECT_TRUE(es.should_stop());
    EXPECT_EQ(es.best_epoch(), 3u);
    EXPECT_EQ(es.best_loss(), 4.0);
}

TEST(TrainClassifier, SnapshotIsBestDevLoss) {
    const auto& t = toy();
    auto cfg = small_train(6);
    auto run = train_classifier(t.train.examples, t.dev.examples, t.emb, ClassifierConfig{8, {}}, cfg);
    ASSERT_FALSE(run.history.epochs.empty());
    double best = 1e300;
    for (const auto& r : run.history.epochs) best = std::min(best, *r.dev_loss);
    EXPECT_EQ(*run.history.epochs[run.history.best_epoch - 1].dev_loss, best);
    EXPECT_LE(best, *run.history.epochs.back().dev_loss);
    EXPECT_NEAR(mean_classifier_loss(run.model, t.dev.examples), best, 1e-9);
}

TEST(TrainClassifier, RejectsEmptyAndBadConfig) {
    const auto& t = toy();
    EXPECT_THROW(train_classifier({}, t.dev.examples, t.emb, ClassifierConfig{4, {}}, small_train()), std::invalid_argument);
    auto bad = small_train();
    bad.batch_size = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(TrainClassifier, DeterministicForSeed) {
    const auto& t = toy();
    auto a = train_classifier(t.train.examples, t.dev.examples, t.emb, ClassifierConfig{4, {}}, small_train(2));
    auto b = train_classifier(t.train.examples, t.dev.examples, t.emb, ClassifierConfig{4, {}}, small_train(2));
    for (std::size_t k = 0; k < a.model.params().size(); ++k) EXPECT_EQ(a.model.params().value(k), b.model.params().value(k));
}

TEST(TrainGenerator, NllMostlyNonIncreasing) {
    const auto& t = toy();
    std::size_t ok = 0, total = 0;
    for (std::uint64_t seed : {1, 2}) {
        GeneratorConfig gc;
        gc.hidden = 8;
        gc.latent = 4;
        auto cfg = small_train(20);
        cfg.seed = seed;
        auto run = train_generator(t.train.examples, t.emb, gc, cfg);
        ASSERT_EQ(run.history.epochs.size(), 20u);
        for (std::size_t i = 1; i < 20; ++i) {
            ++total;
            if (run.history.epochs[i].train_loss <= run.history.epochs[i - 1].train_loss) ++ok;
        }
        EXPECT_LT(run.history.epochs.back().train_loss, run.history.epochs.front().train_loss);
        EXPECT_EQ(static_cast<std::size_t>(run.model.latent_sigma()->size()), 4u);
        EXPECT_TRUE((run.model.latent_sigma()->array() > 0).all());
    }
    EXPECT_GE(ok * 19, 15 * total) << ok << " of " << total;
}

TEST(TrainGenerator, ZeroLatentRejected) {
    const auto& t = toy();
    GeneratorConfig gc;
    gc.hidden = 4;
    gc.latent = 0;
    EXPECT_THROW(train_generator(t.train.examples, t.emb, gc, small_train(1)), std::invalid_argument);
}

TEST(TrainGenerator, CheckpointPreservesNll) {
    const auto& t = toy();
    GeneratorConfig gc;
    gc.hidden = 6;
    gc.latent = 3;
    auto run = train_generator(t.train.examples, t.emb, gc, small_train(2));
    auto dir = temp_dir("gen_ckpt");
    fs::create_directories(dir);
    save_generator(run.model, {t.vocab.hash(), 5, 2}, dir / "g.nlig");
    auto back = load_generator(dir / "g.nlig", t.vocab.hash());
    EXPECT_EQ(mean_token_nll(run.model, t.dev.examples, LatentSource::Sampled, 9),
              mean_token_nll(back, t.dev.examples, LatentSource::Sampled, 9));
}

TEST(GenerateDataset, OversampleOrderAndWorkers) {
    const auto& t = toy();
    GeneratorConfig gc;
    gc.hidden = 6;
    gc.latent = 3;
    gc.table_rows = t.train.size();
    Generator g(t.emb, gc, 1);
    g.set_latent_sigma(Vec::Constant(3, 0.5));
    Dataset src;
    src.vocab_hash = t.vocab.hash();
    src.examples.assign(t.dev.examples.begin(), t.dev.examples.begin() + 20);
    GenerateOptions opts;
    opts.oversample = 2.5;
    opts.generation.seed = 4;
    auto a = generate_dataset(g, src, opts);
    ASSERT_EQ(a.size(), 60u);
    EXPECT_EQ(a.vocab_hash, src.vocab_hash);
    for (std::size_t j = 0; j < a.size(); ++j) {
        EXPECT_EQ(*a.examples[j].origin_index, j % 20);
        EXPECT_EQ(a.examples[j].premise, src.examples[j % 20].premise);
        EXPECT_EQ(a.examples[j].label, src.examples[j % 20].label);
        EXPECT_TRUE(a.examples[j].gen_logprob.has_value());
    }
    opts.workers = 3;
    auto b = generate_dataset(g, src, opts);
    EXPECT_EQ(a.examples, b.examples);
    opts.oversample = 0.5;
    EXPECT_THROW(generate_dataset(g, src, opts), std::invalid_argument);
}

TEST(Filter, StrictThresholdExamples) {
    auto d = counts(2, 1, 1);
    const std::vector<double> probs{0.3, 0.31, 0.9, 0.0};
    auto r = filter_by_probs(d, probs, 0.3);
    EXPECT_EQ(r.kept_indices, (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(filter_by_probs(d, probs, 0.0).kept.size(), 3u);
    EXPECT_THROW(filter_by_probs(d, probs, 1.0), std::invalid_argument);
    EXPECT_THROW(filter_by_probs(d, probs, -0.1), std::invalid_argument);
    EXPECT_THROW(filter_by_probs(d, std::vector<double>{0.5}, 0.3), std::invalid_argument);
}

TEST(Filter, ThresholdChainIsNested) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        auto d = counts(30, 30, 30);
        std::vector<double> probs(d.size());
        for (auto& p : probs) p = rng.uniform();
        std::vector<std::set<std::size_t>> kept;
        for (double t : kDefaultThresholds) {
            auto r = filter_by_probs(d, probs, t);
            kept.emplace_back(r.kept_indices.begin(), r.kept_indices.end());
            for (std::size_t i : r.kept_indices) EXPECT_GT(probs[i], t);
        }
        for (std::size_t k = 1; k < kept.size(); ++k) {
            EXPECT_TRUE(std::includes(kept[k - 1].begin(), kept[k - 1].end(), kept[k].begin(), kept[k].end()));
        }
    }
}

TEST(Filter, JudgeProbsMatchClassify) {
    const auto& t = toy();
    Classifier c(t.emb, ClassifierConfig{4, {}}, 2);
    auto probs = judge_label_probs(c, t.dev.examples, 2);
    for (std::size_t i = 0; i < probs.size(); ++i)
        EXPECT_EQ(probs[i], c.classify(t.dev.examples[i])[label_index(t.dev.examples[i].label)]);
}

TEST(BalanceAndTrim, Cases) {
    auto even = balance_and_trim(counts(100, 100, 100), 300);
    EXPECT_EQ(histogram(even), (std::array<std::size_t, 3>{100, 100, 100}));
    auto skewed = counts(200, 100, 100);
    auto out = balance_and_trim(skewed, 300);
    EXPECT_EQ(histogram(out), (std::array<std::size_t, 3>{100, 100, 100}));
    // first 100 entailments kept, in order
    std::vector<Example> ent;
    for (const auto& ex : skewed.examples)
        if (ex.label == Label::Entailment && ent.size() < 100) ent.push_back(ex);
    std::vector<Example> got;
    for (const auto& ex : out.examples)
        if (ex.label == Label::Entailment) got.push_back(ex);
    EXPECT_EQ(got, ent);
    EXPECT_EQ(balance_and_trim(skewed, 301).size(), 300u);
    EXPECT_EQ(balanced_capacity(skewed), 300u);
    try {
        balance_and_trim(counts(50, 100, 100), 300);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("entailment=50"), std::string::npos) << e.what();
    }
}

TEST(BalanceAndTrim, UniformAndIdempotent) {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Label> labels(200 + rng.below(100));
        for (auto& l : labels) l = kAllLabels[rng.below(3)];
        auto d = with_labels(labels);
        const std::size_t cap = balanced_capacity(d);
        const std::size_t target = rng.below(cap + 1);
        auto once = balance_and_trim(d, target);
        auto h = histogram(once);
        EXPECT_EQ(h[0], h[1]);
        EXPECT_EQ(h[1], h[2]);
        EXPECT_EQ(once.size(), target - target % 3);
        EXPECT_EQ(balance_and_trim(once, target).examples, once.examples);
    }
}

TEST(Merge, IdentityAndSize) {
    auto a = counts(3, 2, 1), b = counts(1, 1, 1), empty = Dataset{};
    EXPECT_EQ(merge_datasets(a, empty).examples, a.examples);
    EXPECT_EQ(merge_datasets(empty, a).examples, a.examples);
    auto m = merge_datasets(a, b);
    EXPECT_EQ(m.size(), a.size() + b.size());
    EXPECT_TRUE(std::equal(a.examples.begin(), a.examples.end(), m.examples.begin()));
    b.vocab_hash = 2;
    EXPECT_THROW(merge_datasets(a, b), std::invalid_argument);
}

TEST(Merge, MergedSetTrainsClassifier) {
    const auto& t = toy();
    auto m = merge_datasets(t.train, t.dev);
    auto run = train_classifier(m.examples, t.dev.examples, t.emb, ClassifierConfig{4, {}}, small_train(2));
    EXPECT_TRUE(std::isfinite(run.history.epochs.back().train_loss));
}

TEST(TrainDiscriminator, SeparableDataGivesLowErrorRate) {
    const auto& t = toy();
    const TokenId a = t.vocab.id("dog"), b = t.vocab.id("cat");
    ASSERT_GT(a, 1);
    ASSERT_GT(b, 1);
    std::vector<Example> orig, gen;
    Rng rng(2);
    for (int i = 0; i < 120; ++i) {
        TokenIds h1, h2;
        for (std::size_t k = 0, n = 1 + rng.below(5); k < n; ++k) {
            h1.push_back(a);
            h2.push_back(b);
        }
        orig.push_back({pad_to({a}, 25), pad_to(h1, 15), Label::Neutral, {}, {}});
        gen.push_back({pad_to({a}, 25), pad_to(h2, 15), Label::Neutral, {}, {}});
    }
    auto cfg = small_train(5);
    auto run = train_discriminator(std::span(orig).first(80), std::span(gen).first(80), t.emb, DiscriminatorConfig{6, 15}, cfg);
    EXPECT_LT(discriminator_error_rate(run.model, std::span(orig).subspan(80), std::span(gen).subspan(80), 1), 0.1);
}

namespace {

PipelineInputs toy_inputs() {
    auto ex = make_attribute_corpus(150, 21);
    PipelineInputs in;
    in.train.assign(ex.begin(), ex.begin() + 90);
    in.dev.assign(ex.begin() + 90, ex.begin() + 120);
    in.test.assign(ex.begin() + 120, ex.end());
    in.source_hashes = {{"train", "x"}};
    return in;
}

PipelineConfig toy_config() {
    PipelineConfig c;
    c.hidden = 4;
    c.embed_dim = 6;
    c.latent_dims = {2};
    c.thresholds = {0.0, 0.3};
    c.train.epochs = 2;
    c.train.max_epochs = 2;
    c.train.batch_size = 16;
    c.train.seed = 3;
    c.discriminator_epochs = 1;
    c.allow_undersized = true;
    return c;
}

std::map<std::string, std::string> tree_hashes(const fs::path& root, bool skip_log) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        auto rel = fs::relative(e.path(), root).generic_string();
        if (skip_log && (rel == "log.txt" || rel == "manifest.json")) continue;
        m[rel] = file_sha1(e.path());
    }
    return m;
}

} // namespace

TEST(Pipeline, WritesArtifactsAndIsReproducible) {
    const auto in = toy_inputs();
    auto cfg = toy_config();
    auto d1 = temp_dir("run1"), d2 = temp_dir("run2");
    auto r1 = run_full_pipeline(in, cfg, d1);
    cfg.workers = 2;
    auto r2 = run_full_pipeline(in, cfg, d2);
    for (const char* f : {"config.json", "vocab.txt", "log.txt", "manifest.json", "checkpoints/judge.nlig",
                          "checkpoints/generator-att-embed-z2.nlig", "checkpoints/discriminator-att-embed-z2.nlig",
                          "checkpoints/classifier-att-embed-z2-t0.3.nlig", "datasets/generated-train-att-embed-z2.jsonl",
                          "datasets/filtered-dev-att-embed-z2-t0.0.jsonl", "reports/report.json", "reports/report.txt"}) {
        EXPECT_TRUE(fs::exists(d1 / f)) << f;
    }
    EXPECT_EQ(tree_hashes(d1, false), tree_hashes(d2, false));
    EXPECT_EQ(r1.report.to_json(), r2.report.to_json());
    // one original row plus one per threshold
    EXPECT_EQ(r1.report.rows.size(), 3u);
}

TEST(Pipeline, ResumeReusesCheckpoints) {
    const auto in = toy_inputs();
    auto cfg = toy_config();
    auto dir = temp_dir("resume");
    auto first = run_full_pipeline(in, cfg, dir);
    auto before = tree_hashes(dir, true);
    auto second = run_full_pipeline(in, cfg, dir);
    EXPECT_EQ(first.report.to_json(), second.report.to_json());
    EXPECT_EQ(before, tree_hashes(dir, true));
}

TEST(Pipeline, DifferentSeedChangesGeneratedData) {
    const auto in = toy_inputs();
    auto cfg = toy_config();
    auto d1 = temp_dir("seed1"), d2 = temp_dir("seed2");
    run_full_pipeline(in, cfg, d1);
    cfg.train.seed = 4;
    run_full_pipeline(in, cfg, d2);
    const auto f = "datasets/generated-train-att-embed-z2.jsonl";
    EXPECT_NE(read_file(d1 / f), read_file(d2 / f));
}

TEST(Pipeline, FailureNamesStage) {
    auto in = toy_inputs();
    auto cfg = toy_config();
    cfg.allow_undersized = false;
    cfg.oversample = 1.0;
    cfg.thresholds = {0.9};
    try {
        run_full_pipeline(in, cfg, temp_dir("fail"));
        FAIL();
    } catch (const PipelineError& e) {
        EXPECT_EQ(e.stage(), "filter att-embed-z2-t0.9");
    }
    in.dev.clear();
    try {
        run_full_pipeline(in, toy_config(), temp_dir("fail2"));
        FAIL();
    } catch (const PipelineError& e) {
        EXPECT_EQ(e.stage(), "config");
    }
}

TEST(Pipeline, ConfigJsonRoundTrip) {
    auto cfg = toy_config();
    cfg.kinds = {GeneratorKind::BaseEmbed, GeneratorKind::VaeEncDec};
    cfg.embeddings_path = "/x/glove.txt";
    auto back = PipelineConfig::from_json(cfg.to_json());
    EXPECT_EQ(back.to_json(), cfg.to_json());
    EXPECT_FALSE(back.generator_batch_size);
    cfg.generator_batch_size = 16;
    cfg.generator_learning_rate = 0.003;
    back = PipelineConfig::from_json(cfg.to_json());
    EXPECT_EQ(back.generator_batch_size, std::optional<std::size_t>(16));
    EXPECT_EQ(back.generator_learning_rate, std::optional<double>(0.003));
    cfg.generator_batch_size = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    EXPECT_EQ(threshold_tag(0.6), "0.6");
    EXPECT_EQ(threshold_tag(0.0), "0.0");
}
