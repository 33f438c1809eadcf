#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "nligen/metrics/dataset_metrics.hpp"
#include "nligen/metrics/text_metrics.hpp"
#include "test_util.hpp"

using namespace nligen;

namespace {

// Letters map to ids 2.. so that 0 stays free for padding.
TokenIds ids(const std::string& text) {
    TokenIds out;
    std::istringstream in(text);
    std::string w;
    static std::map<std::string, TokenId> table;
    while (in >> w) {
        auto [it, fresh] = table.emplace(w, static_cast<TokenId>(table.size() + 2));
        out.push_back(it->second);
    }
    return out;
}

TokenIds random_sentence(Rng& rng, std::size_t max_len, std::size_t V) {
    TokenIds s;
    for (std::size_t i = 0, n = rng.below(max_len + 1); i < n; ++i) s.push_back(static_cast<TokenId>(2 + rng.below(V)));
    return s;
}

// Memoized recursion over suffixes; independent of the library's table fill.
std::size_t lcs_oracle(const TokenIds& a, const TokenIds& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size() || j == b.size()) return 0;
        auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t r = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
        memo[key] = r;
        return r;
    };
    return go(0, 0);
}

struct MeteorCase {
    const char* candidate;
    const char* reference;
    std::size_t matches;
    std::size_t chunks;
    double score;
};

// Match and chunk counts worked out by hand; scores from the closed form.
const MeteorCase kMeteorCases[] = {
    {"the cat", "the cat", 2, 1, 0.9375},
    {"the cat", "the cat sat", 2, 1, 0.6465517241379309},
    {"a b c d", "a b c d", 4, 1, 0.9921875},
    {"a b c d", "d c b a", 4, 4, 0.5},
    {"a b", "c d", 0, 0, 0.0},
    {"a b c", "a x b y c", 3, 3, 0.3125},
    {"a b c d e f", "a b c x d e f", 6, 2, 0.8534621578099838},
    {"a", "a", 1, 1, 0.5},
    {"a b c", "c a b", 3, 2, 0.8518518518518519},
    {"x a b y", "a b", 2, 1, 0.8522727272727273},
    {"a b a b", "a b", 2, 1, 0.8522727272727273},
    {"a a", "a a a", 2, 1, 0.6465517241379309},
    {"a b c d e", "e d c b a", 5, 5, 0.5},
    {"a b c x y", "x y a b c", 5, 2, 0.968},
    {"p q r s t u v w", "p q r s", 4, 1, 0.9019886363636364},
    {"p q", "p q r s t u v w", 2, 1, 0.25337837837837834},
    {"a c b d", "a b c d", 4, 4, 0.5},
    {"a b x c d", "a b c d", 4, 2, 0.9146341463414633},
    {"b a", "a b a", 2, 1, 0.6465517241379309},
    {"c", "a b c d e", 1, 1, 0.10869565217391304},
};

Tensor embeddings(std::size_t V, std::size_t e, std::uint64_t seed) {
    Tensor t({V, e});
    Rng rng(seed);
    for (std::size_t r = 1; r < V; ++r) {
        for (std::size_t c = 0; c < e; ++c) t.at(r, c) = rng.normal();
    }
    return t;
}

std::vector<Example> random_examples(Rng& rng, std::size_t n, std::size_t V) {
    std::vector<Example> out;
    for (std::size_t i = 0; i < n; ++i) {
        Example ex;
        ex.premise = pad_to(random_sentence(rng, 10, V - 2), 25);
        ex.premise[0] = 2;
        ex.hypothesis = pad_to(random_sentence(rng, 8, V - 2), 15);
        ex.label = kAllLabels[i % 3];
        out.push_back(ex);
    }
    return out;
}

} // namespace

TEST(Jaccard, Examples) {
    EXPECT_EQ(jaccard_distance(ids("a man runs"), ids("a man runs")), 0.0);
    EXPECT_EQ(jaccard_distance(ids("a b"), ids("c d")), 1.0);
    EXPECT_DOUBLE_EQ(jaccard_distance(ids("a b c"), ids("b c d")), 0.5);
    EXPECT_EQ(jaccard_distance(TokenIds{}, TokenIds{0, 0}), 0.0);
}

TEST(Jaccard, MatchesSetArithmetic) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        auto a = random_sentence(rng, 10, 8), b = random_sentence(rng, 10, 8);
        std::set<TokenId> sa(a.begin(), a.end()), sb(b.begin(), b.end()), inter, uni;
        std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(inter, inter.end()));
        std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(uni, uni.end()));
        const double expected = uni.empty() ? 0.0 : 1.0 - double(inter.size()) / double(uni.size());
        EXPECT_NEAR(jaccard_distance(a, b), expected, 1e-15);
        EXPECT_NEAR(jaccard_distance(pad_to(a, 25), pad_to(b, 15)), expected, 1e-15);
    }
}

TEST(RougeL, Examples) {
    EXPECT_DOUBLE_EQ(rouge_l(ids("the cat sat"), ids("the cat sat")), 1.0);
    EXPECT_EQ(rouge_l(ids("a b"), ids("c d")), 0.0);
    EXPECT_NEAR(rouge_l(ids("the cat"), ids("the cat sat")), 0.8, 1e-15);
    EXPECT_EQ(rouge_l(TokenIds{}, ids("a")), 0.0);
}

TEST(RougeL, MatchesLcsOracle) {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        auto a = random_sentence(rng, 12, 6), b = random_sentence(rng, 12, 6);
        const std::size_t l = lcs_oracle(a, b);
        EXPECT_EQ(lcs_length(a, b), l);
        double expected = 0.0;
        if (!a.empty() && !b.empty() && l > 0) {
            const double p = double(l) / a.size(), r = double(l) / b.size();
            expected = 2 * p * r / (p + r);
        }
        EXPECT_NEAR(rouge_l(a, b), expected, 1e-15);
        EXPECT_NEAR(rouge_l(pad_to(a, 20), b), expected, 1e-15);
        EXPECT_GE(rouge_l(a, b), 0.0);
        EXPECT_LE(rouge_l(a, b), 1.0);
        if (a.size() == b.size()) EXPECT_NEAR(rouge_l(a, b), rouge_l(b, a), 1e-15);
    }
}

TEST(Meteor, HandEvaluatedCases) {
    for (const auto& c : kMeteorCases) {
        auto cand = ids(c.candidate), ref = ids(c.reference);
        auto align = meteor_align(cand, ref);
        EXPECT_EQ(align.matches, c.matches) << c.candidate << " | " << c.reference;
        EXPECT_EQ(align.chunks, c.chunks) << c.candidate << " | " << c.reference;
        EXPECT_NEAR(meteor_lite(cand, ref), c.score, 1e-12) << c.candidate << " | " << c.reference;
        EXPECT_NEAR(meteor_lite(pad_to(cand, 15), pad_to(ref, 25)), c.score, 1e-12);
    }
}

TEST(Meteor, NotSymmetric) {
    EXPECT_NE(meteor_lite(ids("the cat"), ids("the cat sat")), meteor_lite(ids("the cat sat"), ids("the cat")));
}

TEST(Meteor, RangeOnRandomPairs) {
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        auto a = random_sentence(rng, 10, 5), b = random_sentence(rng, 10, 5);
        const double s = meteor_lite(a, b);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
    }
}

TEST(LabelAccuracy, JudgeFixedPointAndComplement) {
    Classifier judge(embeddings(12, 3, 1), ClassifierConfig{4, {}}, 2);
    Rng rng(4);
    test::randomize(judge.params(), rng, 1.0);
    auto data = random_examples(rng, 300, 12);
    for (auto& ex : data) ex.label = kAllLabels[predicted_label(judge.classify(ex))];
    auto acc = dataset_label_accuracy(data, judge);
    EXPECT_EQ(acc.overall, 1.0);
    for (auto& ex : data) ex.label = kAllLabels[(label_index(ex.label) + 1) % 3];
    EXPECT_EQ(dataset_label_accuracy(data, judge).overall, 0.0);
    EXPECT_THROW(dataset_label_accuracy(std::span<const Example>{}, judge), std::invalid_argument);
}

TEST(LabelAccuracy, RandomJudgeNearChance) {
    Classifier judge(embeddings(12, 3, 5), ClassifierConfig{4, {}}, 6);
    Rng rng(7);
    auto data = random_examples(rng, 3000, 12);
    EXPECT_NEAR(dataset_label_accuracy(data, judge).overall, 1.0 / 3.0, 0.05);
}

TEST(LabelAccuracy, PerLabelRatesWeightToOverall) {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        Classifier judge(embeddings(12, 3, trial), ClassifierConfig{4, {}}, trial);
        test::randomize(judge.params(), rng, 1.0);
        auto data = random_examples(rng, 200 + 17 * trial, 12);
        for (std::size_t i = 0; i < data.size(); i += 4) data[i].label = Label::Neutral;
        auto acc = dataset_label_accuracy(data, judge);
        double weighted = 0.0;
        for (std::size_t k = 0; k < 3; ++k) weighted += acc.per_label[k] * double(acc.label_counts[k]);
        EXPECT_NEAR(weighted / double(acc.total), acc.overall, 1e-12);
        EXPECT_EQ(acc.total, data.size());
    }
}

TEST(TextSimilarity, MeansOverPairs) {
    Example a{pad_to(ids("a b c"), 25), pad_to(ids("b c d"), 15), Label::Neutral, {}, {}};
    Example b{pad_to(ids("x y"), 25), pad_to(ids("x y"), 15), Label::Neutral, {}, {}};
    std::vector<Example> data{a, b};
    auto sim = mean_text_similarity(data, data);
    EXPECT_DOUBLE_EQ(sim.jaccard, 0.25);
    EXPECT_DOUBLE_EQ(sim.rouge_l, 1.0);
    EXPECT_THROW(mean_text_similarity(data, std::span<const Example>(data.data(), 1)), std::invalid_argument);
}

TEST(TokenNll, UniformModelGivesLogV) {
    const std::size_t V = 9;
    GeneratorConfig cfg;
    cfg.kind = GeneratorKind::AttEmbed;
    cfg.hidden = 3;
    cfg.latent = 2;
    cfg.table_rows = 50;
    Generator gen(embeddings(V, 3, 1), cfg, 1);
    Rng rng(9);
    test::randomize(gen.params(), rng);
    const auto& out = gen.output_layer();
    for (auto id : {out.class_weights_id(), out.class_bias_id(), out.word_weights_id(), out.word_bias_id()}) {
        gen.params().value(id).set_zero();
    }
    gen.set_latent_sigma(Vec::Ones(2));
    auto data = random_examples(rng, 50, V);
    EXPECT_NEAR(mean_token_nll(gen, data, LatentSource::Table), std::log(9.0), 1e-12);
    EXPECT_NEAR(mean_token_nll(gen, data, LatentSource::Sampled, 3), std::log(9.0), 1e-12);
}

TEST(TokenNll, NonNegativeForRandomModels) {
    Rng rng(10);
    for (auto kind : {GeneratorKind::AttEmbed, GeneratorKind::BaseEmbed, GeneratorKind::EncDec,
                      GeneratorKind::VaeEncDec}) {
        GeneratorConfig cfg;
        cfg.kind = kind;
        cfg.hidden = 3;
        cfg.latent = 2;
        cfg.table_rows = uses_latent_table(kind) ? 20 : 0;
        Generator gen(embeddings(10, 3, 2), cfg, 3);
        test::randomize(gen.params(), rng, 1.0);
        gen.set_latent_sigma(Vec::Ones(2));
        auto data = random_examples(rng, 20, 10);
        EXPECT_GE(mean_token_nll(gen, data, LatentSource::Sampled, 1), 0.0);
        EXPECT_EQ(mean_token_nll(gen, data, LatentSource::Sampled, 1), mean_token_nll(gen, data, LatentSource::Sampled, 1));
    }
}

TEST(DiscriminatorError, ZeroParamsAllTies) {
    Discriminator disc(embeddings(10, 3, 1), DiscriminatorConfig{4, 15}, 1);
    test::zero_all(disc.params());
    Rng rng(11);
    auto a = random_examples(rng, 40, 10), b = random_examples(rng, 40, 10);
    EXPECT_EQ(discriminator_error_rate(disc, a, b, 1), 1.0);
}

TEST(DiscriminatorError, CopiedSetIsAllTies) {
    Discriminator disc(embeddings(10, 3, 1), DiscriminatorConfig{4, 15}, 1);
    Rng rng(12);
    test::randomize(disc.params(), rng, 1.0);
    auto a = random_examples(rng, 60, 10);
    for (std::uint64_t seed : {0, 1, 2}) EXPECT_EQ(discriminator_error_rate(disc, a, a, seed), 1.0);
    auto b = random_examples(rng, 59, 10);
    EXPECT_THROW(discriminator_error_rate(disc, a, b), std::invalid_argument);
}

TEST(MetricReport, JsonRoundTripAndTable) {
    MetricReport r;
    r.meta["seed"] = "7";
    MetricRow row;
    row.dataset = "att-embed z=4 t=0.6";
    row.model = "att-embed";
    row.latent = 4;
    row.threshold = 0.6;
    row.accuracy_at_t = 0.8125;
    LabelAccuracy acc;
    acc.overall = 0.5;
    acc.per_label = {0.25, 0.5, 0.75};
    acc.label_counts = {4, 4, 4};
    acc.total = 12;
    row.data_accuracy = acc;
    row.similarity = TextSimilarity{0.1, 0.2, 0.3};
    row.nll = 1.25;
    row.discriminator_error = 0.375;
    row.size = 12;
    r.rows.push_back(row);
    r.rows.push_back(MetricRow{"original", {}, {}, {}, 0.9, {}, {}, {}, {}, {}, 300});
    const std::string text = r.to_json();
    MetricReport back = MetricReport::from_json(text);
    EXPECT_EQ(back.to_json(), text);
    EXPECT_EQ(back.meta.at("seed"), "7");
    ASSERT_EQ(back.rows.size(), 2u);
    EXPECT_EQ(back.rows[0].data_accuracy->per_label[2], 0.75);
    EXPECT_FALSE(back.rows[1].nll.has_value());
    const std::string table = r.to_table();
    for (const char* col : {"dataset", "acc@t", "acc-data", "nll/token", "disc-er"}) {
        EXPECT_NE(table.find(col), std::string::npos) << col;
    }
}
