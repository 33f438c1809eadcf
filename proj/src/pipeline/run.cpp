#include "nligen/pipeline/run.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nligen/data/vocab.hpp"
#include "nligen/io/checkpoint.hpp"
#include "nligen/io/hash.hpp"
#include "nligen/pipeline/dataset_ops.hpp"

namespace nligen {

namespace fs = std::filesystem;
using nlohmann::json;

std::string threshold_tag(double t) {
    std::ostringstream os;
    os << t;
    std::string s = os.str();
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
    return s;
}

void PipelineConfig::validate() const {
    if (kinds.empty()) throw std::invalid_argument("pipeline: no generator kinds");
    if (latent_dims.empty()) throw std::invalid_argument("pipeline: no latent dimensions");
    for (std::size_t z : latent_dims)
        if (z == 0) throw std::invalid_argument("pipeline: latent dimension must be positive");
    for (double t : thresholds)
        if (!(t >= 0.0 && t < 1.0)) throw std::invalid_argument("pipeline: threshold " + std::to_string(t) + " outside [0, 1)");
    if (hidden == 0 || embed_dim == 0) throw std::invalid_argument("pipeline: dimensions must be positive");
    if (discriminator_epochs == 0) throw std::invalid_argument("pipeline: discriminator_epochs must be positive");
    if (!(oversample >= 1.0)) throw std::invalid_argument("pipeline: oversample must be >= 1");
    if (beam == 0) throw std::invalid_argument("pipeline: beam must be positive");
    if (generator_batch_size && *generator_batch_size == 0)
        throw std::invalid_argument("pipeline: generator_batch_size must be positive");
    if (generator_learning_rate && !(*generator_learning_rate > 0.0 && std::isfinite(*generator_learning_rate)))
        throw std::invalid_argument("pipeline: generator_learning_rate must be positive");
    train.validate();
}

json PipelineConfig::to_json() const {
    json j;
    j["kinds"] = json::array();
    for (GeneratorKind k : kinds) j["kinds"].push_back(std::string(to_string(k)));
    j["latent_dims"] = latent_dims;
    j["thresholds"] = thresholds;
    j["hidden"] = hidden;
    j["embed_dim"] = embed_dim;
    j["embeddings_path"] = embeddings_path ? json(*embeddings_path) : json(nullptr);
    j["min_count"] = min_count;
    j["premise_len"] = limits.premise;
    j["hypothesis_len"] = limits.hypothesis;
    j["epochs"] = train.epochs;
    j["max_epochs"] = train.max_epochs;
    j["patience"] = train.patience;
    j["batch_size"] = train.batch_size;
    j["learning_rate"] = train.adam.learning_rate;
    j["beta1"] = train.adam.beta1;
    j["beta2"] = train.adam.beta2;
    j["adam_epsilon"] = train.adam.epsilon;
    j["generator_batch_size"] = generator_batch_size ? json(*generator_batch_size) : json(nullptr);
    j["generator_learning_rate"] = generator_learning_rate ? json(*generator_learning_rate) : json(nullptr);
    j["clip_norm"] = train.clip_norm;
    j["seed"] = train.seed;
    j["per_dimension_sigma"] = train.per_dimension_sigma;
    j["discriminator_epochs"] = discriminator_epochs;
    j["oversample"] = oversample;
    j["beam"] = beam;
    j["merged_experiment"] = merged_experiment;
    j["allow_undersized"] = allow_undersized;
    j["resume"] = resume;
    j["f32_checkpoints"] = f32_checkpoints;
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    const json defaults = c.to_json();
    for (const auto& [key, _] : j.items()) {
        if (!defaults.contains(key)) throw std::invalid_argument("pipeline config: unknown key '" + key + "'");
    }
    if (j.contains("kinds")) {
        c.kinds.clear();
        for (const auto& k : j.at("kinds")) c.kinds.push_back(generator_kind_from_string(k.get<std::string>()));
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("latent_dims", c.latent_dims);
    get("thresholds", c.thresholds);
    get("hidden", c.hidden);
    get("embed_dim", c.embed_dim);
    if (j.contains("embeddings_path") && !j.at("embeddings_path").is_null())
        c.embeddings_path = j.at("embeddings_path").get<std::string>();
    get("min_count", c.min_count);
    get("premise_len", c.limits.premise);
    get("hypothesis_len", c.limits.hypothesis);
    get("epochs", c.train.epochs);
    get("max_epochs", c.train.max_epochs);
    get("patience", c.train.patience);
    get("batch_size", c.train.batch_size);
    get("learning_rate", c.train.adam.learning_rate);
    get("beta1", c.train.adam.beta1);
    get("beta2", c.train.adam.beta2);
    get("adam_epsilon", c.train.adam.epsilon);
    if (j.contains("generator_batch_size") && !j.at("generator_batch_size").is_null())
        c.generator_batch_size = j.at("generator_batch_size").get<std::size_t>();
    if (j.contains("generator_learning_rate") && !j.at("generator_learning_rate").is_null())
        c.generator_learning_rate = j.at("generator_learning_rate").get<double>();
    get("clip_norm", c.train.clip_norm);
    get("seed", c.train.seed);
    get("per_dimension_sigma", c.train.per_dimension_sigma);
    get("discriminator_epochs", c.discriminator_epochs);
    get("oversample", c.oversample);
    get("beam", c.beam);
    get("merged_experiment", c.merged_experiment);
    get("allow_undersized", c.allow_undersized);
    get("resume", c.resume);
    get("f32_checkpoints", c.f32_checkpoints);
    return c;
}

PipelineInputs load_pipeline_inputs(const fs::path& train, const fs::path& dev, const fs::path& test,
                                    const SequenceLimits& limits) {
    PipelineInputs in;
    in.train = load_corpus(train, limits).examples;
    in.dev = load_corpus(dev, limits).examples;
    in.test = load_corpus(test, limits).examples;
    in.source_hashes["train"] = file_sha1(train);
    in.source_hashes["dev"] = file_sha1(dev);
    in.source_hashes["test"] = file_sha1(test);
    return in;
}

namespace {

class RunLog {
public:
    RunLog(const fs::path& path, const std::function<void(const std::string&)>& progress)
        : out_(path, std::ios::binary | std::ios::trunc), progress_(progress) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
    }
    void operator()(const std::string& line) {
        out_ << line << '\n';
        out_.flush();
        if (progress_) progress_(line);
    }

private:
    std::ofstream out_;
    std::function<void(const std::string&)> progress_;
};

template <class F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

std::string fixed(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << std::fixed << v;
    return os.str();
}

// First n examples of a generated set (its first pass over the source).
std::span<const Example> first_pass(const Dataset& d, std::size_t n) {
    return std::span<const Example>(d.examples).first(std::min(n, d.size()));
}

Dataset trim_filtered(const Dataset& filtered, std::size_t target, bool allow_undersized, const std::string& what,
                      RunLog& log) {
    const std::size_t want = target - target % kLabelCount;
    const std::size_t have = balanced_capacity(filtered);
    if (have < want) {
        if (!allow_undersized) {
            throw std::runtime_error(what + ": filtered set holds only " + std::to_string(have) +
                                     " balanced examples, need " + std::to_string(want) +
                                     "; raise the oversample factor or allow undersized sets");
        }
        log(what + ": undersized, trimmed to " + std::to_string(have) + " of " + std::to_string(want));
        return balance_and_trim(filtered, have);
    }
    return balance_and_trim(filtered, want);
}

void write_manifest(const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), root).generic_string();
        if (rel == "manifest.json" || rel.ends_with(".tmp")) continue;
        files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    json m = json::object();
    for (const auto& f : files) m[f] = file_sha1(root / f);
    write_file_atomic(root / "manifest.json", m.dump(2) + "\n");
}

} // namespace

PipelineResult run_full_pipeline(const PipelineInputs& inputs, const PipelineConfig& cfg, const fs::path& out_dir,
                                 const std::function<void(const std::string&)>& progress) {
    stage("config", [&] {
        cfg.validate();
        if (inputs.train.empty() || inputs.dev.empty() || inputs.test.empty())
            throw std::invalid_argument("train, dev and test splits must all be non-empty");
    });
    const fs::path ckpt_dir = out_dir / "checkpoints";
    const fs::path data_dir = out_dir / "datasets";
    const fs::path report_dir = out_dir / "reports";
    stage("setup", [&] {
        fs::create_directories(ckpt_dir);
        fs::create_directories(data_dir);
        fs::create_directories(report_dir);
        json c = cfg.to_json();
        c["inputs"] = inputs.source_hashes;
        write_file_atomic(out_dir / "config.json", c.dump(2) + "\n");
    });
    RunLog log(out_dir / "log.txt", progress);
    const std::uint64_t seed = cfg.train.seed;
    TrainConfig train_cfg = cfg.train;
    train_cfg.workers = cfg.workers;
    const Dtype dtype = cfg.f32_checkpoints ? Dtype::F32 : Dtype::F64;

    // Vocabulary and embeddings come from the original training split only.
    const Vocab vocab = stage("vocab", [&] {
        const auto sentences = corpus_sentences(inputs.train);
        Vocab v = Vocab::build(sentences, cfg.min_count);
        v.save(out_dir / "vocab.txt");
        return v;
    });
    const std::uint64_t vh = vocab.hash();
    log("vocab size " + std::to_string(vocab.size()) + " hash " + hash_hex(vh));
    const Tensor embeddings = stage("embeddings", [&] {
        return cfg.embeddings_path ? load_embeddings(*cfg.embeddings_path, vocab, derive_seed(seed, "embeddings"), cfg.embed_dim)
                                   : random_embeddings(vocab, derive_seed(seed, "embeddings"), cfg.embed_dim);
    });
    const Dataset train = encode_corpus(inputs.train, vocab, cfg.limits);
    const Dataset dev = encode_corpus(inputs.dev, vocab, cfg.limits);
    const Dataset test = encode_corpus(inputs.test, vocab, cfg.limits);
    log("splits train " + std::to_string(train.size()) + " dev " + std::to_string(dev.size()) + " test " +
        std::to_string(test.size()));

    const ClassifierConfig clf_cfg{cfg.hidden, cfg.limits};
    auto train_or_load_classifier = [&](const fs::path& path, const Dataset& tr, const Dataset& dv,
                                        std::uint64_t stage_seed, const std::string& name) {
        if (cfg.resume && fs::exists(path)) {
            log(name + ": resumed from " + fs::relative(path, out_dir).generic_string());
            return load_classifier(path, vh);
        }
        TrainConfig tc = train_cfg;
        tc.seed = stage_seed;
        ClassifierRun run = train_classifier(tr.examples, dv.examples, embeddings, clf_cfg, tc,
                                             [&](const std::string& l) { log(name + ": " + l); });
        log(name + ": best epoch " + std::to_string(run.history.best_epoch));
        save_classifier(run.model, {vh, stage_seed, run.history.best_epoch}, path, dtype);
        return cfg.f32_checkpoints ? load_classifier(path, vh) : std::move(run.model);
    };

    const fs::path judge_path = ckpt_dir / "judge.nlig";
    const Classifier judge = stage("judge", [&] {
        return train_or_load_classifier(judge_path, train, dev, derive_seed(seed, "judge"), "judge");
    });
    PipelineResult result;
    result.judge_sha1 = file_sha1(judge_path);
    const LabelAccuracy judge_test = dataset_label_accuracy(test.examples, judge);
    result.judge_test_accuracy = judge_test.overall;
    log("judge test accuracy " + fixed(judge_test.overall) + " sha1 " + result.judge_sha1);

    MetricReport& report = result.report;
    report.meta["seed"] = std::to_string(seed);
    report.meta["judge_sha1"] = result.judge_sha1;
    report.meta["vocab_hash"] = hash_hex(vh);
    for (const auto& [k, v] : inputs.source_hashes) report.meta["input_" + k + "_sha1"] = v;
    report.meta["generated_dev_filtering"] = "filtered at the same threshold as the training set";
    report.meta["nll"] = "per token on the original dev split, Z drawn from N(0, sigma) for embed kinds";
    report.meta["acc_data"] = "judge agreement on the unfiltered generated dev set";
    {
        MetricRow row;
        row.dataset = "original";
        row.model = "original";
        row.accuracy_at_t = judge_test.overall;
        row.data_accuracy = judge_test;
        row.size = train.size();
        report.rows.push_back(row);
    }

    for (GeneratorKind kind : cfg.kinds) {
        for (std::size_t z : cfg.latent_dims) {
            const std::string tag = std::string(to_string(kind)) + "-z" + std::to_string(z);
            const std::string label = std::string(to_string(kind)) + " z=" + std::to_string(z);

            const fs::path gen_path = ckpt_dir / ("generator-" + tag + ".nlig");
            const Generator gen = stage("generator " + tag, [&]() -> Generator {
                if (cfg.resume && fs::exists(gen_path)) {
                    log("generator " + tag + ": resumed");
                    return load_generator(gen_path, vh);
                }
                GeneratorConfig gc;
                gc.kind = kind;
                gc.hidden = cfg.hidden;
                gc.latent = z;
                gc.limits = cfg.limits;
                TrainConfig tc = train_cfg;
                if (cfg.generator_batch_size) tc.batch_size = *cfg.generator_batch_size;
                if (cfg.generator_learning_rate) tc.adam.learning_rate = *cfg.generator_learning_rate;
                tc.seed = derive_seed(seed, "generator/" + tag);
                GeneratorRun run = train_generator(train.examples, embeddings, gc, tc, [&](const std::string& l) { log(l); });
                save_generator(run.model, {vh, tc.seed, cfg.train.epochs}, gen_path, dtype);
                if (cfg.f32_checkpoints) return load_generator(gen_path, vh);
                return std::move(run.model);
            });

            GenerateOptions go;
            go.generation.beam_k = cfg.beam;
            go.generation.max_len = cfg.limits.hypothesis;
            go.generation.banned = {kOovId};
            go.oversample = cfg.oversample;
            go.workers = cfg.workers;
            const auto [gen_train, gen_dev] = stage("generate " + tag, [&] {
                GenerateOptions g = go;
                g.generation.seed = derive_seed(seed, "generate-train/" + tag);
                Dataset gtr = generate_dataset(gen, train, g);
                g.generation.seed = derive_seed(seed, "generate-dev/" + tag);
                Dataset gdv = generate_dataset(gen, dev, g);
                write_dataset(data_dir / ("generated-train-" + tag + ".jsonl"), gtr, vocab);
                write_dataset(data_dir / ("generated-dev-" + tag + ".jsonl"), gdv, vocab);
                return std::pair{std::move(gtr), std::move(gdv)};
            });
            log("generated " + tag + ": train " + std::to_string(gen_train.size()) + " dev " +
                std::to_string(gen_dev.size()));

            MetricRow base;
            base.dataset = label;
            base.model = std::string(to_string(kind));
            base.latent = z;
            stage("metrics " + tag, [&] {
                base.data_accuracy = dataset_label_accuracy(gen_dev.examples, judge);
                std::vector<Example> refs;
                refs.reserve(gen_dev.size());
                for (const Example& ex : gen_dev.examples) refs.push_back(dev.examples[*ex.origin_index]);
                base.similarity = mean_text_similarity(gen_dev.examples, refs);
                base.nll = mean_token_nll(gen, dev.examples, LatentSource::Sampled, derive_seed(seed, "nll/" + tag));
            });
            log("metrics " + tag + ": acc-data " + fixed(base.data_accuracy->overall) + " nll " + fixed(*base.nll));

            stage("discriminator " + tag, [&] {
                const fs::path path = ckpt_dir / ("discriminator-" + tag + ".nlig");
                const DiscriminatorConfig dc{cfg.hidden, cfg.limits.hypothesis};
                std::optional<Discriminator> disc;
                if (cfg.resume && fs::exists(path)) {
                    disc = load_discriminator(path, vh);
                    log("discriminator " + tag + ": resumed");
                } else {
                    TrainConfig tc = train_cfg;
                    tc.epochs = cfg.discriminator_epochs;
                    tc.seed = derive_seed(seed, "discriminator/" + tag);
                    DiscriminatorRun run = train_discriminator(train.examples, first_pass(gen_train, train.size()),
                                                               embeddings, dc, tc,
                                                               [&](const std::string& l) { log(tag + " " + l); });
                    save_discriminator(run.model, {vh, tc.seed, tc.epochs}, path, dtype);
                    disc = cfg.f32_checkpoints ? load_discriminator(path, vh) : std::move(run.model);
                }
                base.discriminator_error = discriminator_error_rate(*disc, dev.examples, first_pass(gen_dev, dev.size()),
                                                                    derive_seed(seed, "disc-eval/" + tag));
            });
            log("discriminator " + tag + ": error rate " + fixed(*base.discriminator_error));

            const auto probs_train = judge_label_probs(judge, gen_train.examples, cfg.workers);
            const auto probs_dev = judge_label_probs(judge, gen_dev.examples, cfg.workers);
            for (double t : cfg.thresholds) {
                const std::string ttag = tag + "-t" + threshold_tag(t);
                const auto [ftrain, fdev] = stage("filter " + ttag, [&] {
                    Dataset ft = trim_filtered(filter_by_probs(gen_train, probs_train, t).kept, train.size(),
                                               cfg.allow_undersized, "filter " + ttag + " train", log);
                    Dataset fd = trim_filtered(filter_by_probs(gen_dev, probs_dev, t).kept, dev.size(),
                                               cfg.allow_undersized, "filter " + ttag + " dev", log);
                    write_dataset(data_dir / ("filtered-train-" + ttag + ".jsonl"), ft, vocab);
                    write_dataset(data_dir / ("filtered-dev-" + ttag + ".jsonl"), fd, vocab);
                    return std::pair{std::move(ft), std::move(fd)};
                });
                MetricRow row = base;
                row.threshold = t;
                row.size = ftrain.size();
                stage("classifier " + ttag, [&] {
                    const Classifier clf = train_or_load_classifier(ckpt_dir / ("classifier-" + ttag + ".nlig"), ftrain,
                                                                    fdev, derive_seed(seed, "classifier/" + ttag),
                                                                    "classifier " + ttag);
                    row.accuracy_at_t = classifier_accuracy(test.examples, clf);
                    row.accuracy_generated_dev = classifier_accuracy(fdev.examples, clf);
                });
                log("classifier " + ttag + ": test accuracy " + fixed(*row.accuracy_at_t) + " generated dev " +
                    fixed(*row.accuracy_generated_dev));
                report.rows.push_back(row);

                if (cfg.merged_experiment) {
                    MetricRow merged;
                    merged.dataset = "original + " + label;
                    merged.model = "merged";
                    merged.latent = z;
                    merged.threshold = t;
                    stage("merged " + ttag, [&] {
                        const Dataset m = merge_datasets(train, ftrain);
                        merged.size = m.size();
                        const Classifier clf = train_or_load_classifier(ckpt_dir / ("merged-" + ttag + ".nlig"), m,
                                                                        dev, derive_seed(seed, "merged/" + ttag),
                                                                        "merged " + ttag);
                        merged.accuracy_at_t = classifier_accuracy(test.examples, clf);
                    });
                    log("merged " + ttag + ": test accuracy " + fixed(*merged.accuracy_at_t));
                    report.rows.push_back(merged);
                }
            }
        }
    }

    stage("report", [&] {
        write_file_atomic(report_dir / "report.json", report.to_json());
        write_file_atomic(report_dir / "report.txt", report.to_table());
        log("done");
        write_manifest(out_dir);
    });
    return result;
}

} // namespace nligen
