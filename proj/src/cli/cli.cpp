#include "nligen/cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nligen/data/corpus.hpp"
#include "nligen/data/vocab.hpp"
#include "nligen/io/checkpoint.hpp"
#include "nligen/io/hash.hpp"
#include "nligen/metrics/dataset_metrics.hpp"
#include "nligen/numerics/parallel.hpp"
#include "nligen/pipeline/dataset_ops.hpp"
#include "nligen/pipeline/run.hpp"
#include "nligen/pipeline/train.hpp"

namespace nligen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kSubcommands = {"train-classifier", "train-generator", "generate", "filter",
                                               "evaluate",         "discriminate",    "pipeline"};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string json_scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (const auto& e : v) {
            if (!s.empty()) s += ',';
            s += json_scalar(e);
        }
        return s;
    }
    return v.dump();
}

// Expands --config into option tokens placed directly after the subcommand,
// so later command-line flags take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return std::find(kSubcommands.begin(), kSubcommands.end(), a) != kSubcommands.end();
    });
    if (sub == args.end()) return args;
    std::optional<std::string> path;
    for (auto it = sub + 1; it != args.end(); ++it) {
        if (*it == "--config" && it + 1 != args.end()) path = *(it + 1);
        if (it->starts_with("--config=")) path = it->substr(9);
    }
    if (!path) return args;
    json cfg;
    try {
        std::ifstream in(*path);
        if (!in) throw UsageError("cannot read config file " + *path);
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError("config file " + *path + " is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config file " + *path + " must hold a JSON object");
    std::map<std::string, json> values;
    for (const auto& [k, v] : cfg.items()) {
        if (std::find(kSubcommands.begin(), kSubcommands.end(), k) != kSubcommands.end()) continue;
        values[k] = v;
    }
    if (cfg.contains(*sub) && cfg.at(*sub).is_object())
        for (const auto& [k, v] : cfg.at(*sub).items()) values[k] = v;
    std::vector<std::string> injected;
    for (const auto& [k, v] : values) {
        if (k == "config") continue;
        if (v.is_boolean()) {
            injected.push_back("--" + k + "=" + (v.get<bool>() ? "true" : "false"));
        } else if (!v.is_null()) {
            injected.push_back("--" + k);
            injected.push_back(json_scalar(v));
        }
    }
    args.insert(sub + 1, injected.begin(), injected.end());
    return args;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string("bad value '") + item + "' for " + what);
        }
    }
    if (out.empty()) throw UsageError(std::string(what) + " must not be empty");
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s, const char* what) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(s)) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
            throw UsageError(std::string("bad value '") + item + "' for " + what);
        out.push_back(std::stoull(item));
    }
    if (out.empty()) throw UsageError(std::string(what) + " must not be empty");
    return out;
}

std::vector<GeneratorKind> parse_kinds(const std::string& s) {
    std::vector<GeneratorKind> out;
    for (const auto& item : split_list(s)) {
        try {
            out.push_back(generator_kind_from_string(item));
        } catch (const std::invalid_argument&) {
            throw UsageError("unknown model kind '" + item + "' (att-embed, base-embed, encdec, vae-encdec)");
        }
    }
    if (out.empty()) throw UsageError("--model must not be empty");
    return out;
}

// Vocabulary next to a checkpoint: <dir>/vocab.txt or <dir>/../vocab.txt.
Vocab resolve_vocab(const std::string& flag, const fs::path& checkpoint) {
    if (!flag.empty()) return Vocab::load(flag);
    const fs::path dir = checkpoint.parent_path().empty() ? fs::path(".") : checkpoint.parent_path();
    for (const fs::path& p : {dir / "vocab.txt", dir / ".." / "vocab.txt"}) {
        if (fs::exists(p)) return Vocab::load(p);
    }
    throw std::runtime_error("no --vocab given and no vocab.txt found beside " + checkpoint.string());
}

// Loads the vocabulary at path, or builds it from the training file and saves it there.
Vocab vocab_for_training(const fs::path& path, const std::vector<TextExample>& train, std::size_t min_count,
                         std::ostream& err) {
    if (fs::exists(path)) return Vocab::load(path);
    Vocab v = Vocab::build(corpus_sentences(train), min_count);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    v.save(path);
    err << "wrote vocabulary (" << v.size() << " tokens) to " << path.string() << '\n';
    return v;
}

fs::path default_vocab_path(const std::string& out) {
    const fs::path p(out);
    return (p.parent_path().empty() ? fs::path(".") : p.parent_path()) / "vocab.txt";
}

struct Common {
    std::string config;
    std::size_t workers = default_workers();
    std::uint64_t seed = 0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON file with option values; flags override it");
    app->add_option("--workers", c.workers, "Worker threads for generation and evaluation")->check(CLI::PositiveNumber);
    app->add_option("--seed", c.seed, "Random seed");
}

struct ModelFlags {
    std::size_t hidden = 150;
    std::size_t embed_dim = 50;
    std::string embeddings;
    std::string vocab;
    std::size_t min_count = 1;
};

void add_model_flags(CLI::App* app, ModelFlags& m, bool with_vocab = true) {
    app->add_option("--hidden", m.hidden, "Hidden size d")->check(CLI::PositiveNumber);
    app->add_option("--embed-dim", m.embed_dim, "Word vector size")->check(CLI::PositiveNumber);
    app->add_option("--embeddings", m.embeddings, "Pretrained word vectors (word v1 ... vn); random when empty");
    if (with_vocab) app->add_option("--vocab", m.vocab, "Vocabulary file; built from the training data when missing");
    app->add_option("--min-count", m.min_count, "Minimum token frequency for the vocabulary");
}

struct OptimFlags {
    std::size_t batch = 64;
    double lr = 0.001;
    double clip = 5.0;
    bool f32 = false;
};

void add_optim_flags(CLI::App* app, OptimFlags& o) {
    app->add_option("--batch", o.batch, "Mini-batch size")->check(CLI::PositiveNumber);
    app->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    app->add_option("--clip", o.clip, "Global gradient norm clip")->check(CLI::PositiveNumber);
    app->add_flag("--f32", o.f32, "Store checkpoint values as 32-bit floats");
}

Tensor make_embeddings(const ModelFlags& m, const Vocab& vocab, std::uint64_t seed) {
    const std::uint64_t s = derive_seed(seed, "embeddings");
    return m.embeddings.empty() ? random_embeddings(vocab, s, m.embed_dim)
                                : load_embeddings(m.embeddings, vocab, s, m.embed_dim);
}

std::function<void(const std::string&)> err_logger(std::ostream& err) {
    return [&err](const std::string& l) { err << l << '\n'; };
}

} // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generate, filter and evaluate NLI datasets built by hypothesis generators.", "nligen"};
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.get_formatter()->column_width(40);

    std::function<int()> action;

    // train-classifier
    Common tc_common;
    ModelFlags tc_model;
    OptimFlags tc_optim;
    std::string tc_train, tc_dev, tc_out;
    std::size_t tc_max_epochs = 100, tc_patience = 3;
    auto* tc = app.add_subcommand("train-classifier", "Train the match-LSTM classifier with early stopping");
    tc->add_option("--train", tc_train, "Training JSONL")->required();
    tc->add_option("--dev", tc_dev, "Development JSONL for early stopping")->required();
    tc->add_option("--out", tc_out, "Output checkpoint")->required();
    tc->add_option("--max-epochs", tc_max_epochs, "Epoch limit")->check(CLI::PositiveNumber);
    tc->add_option("--patience", tc_patience, "Epochs without dev improvement before stopping")->check(CLI::PositiveNumber);
    add_model_flags(tc, tc_model);
    add_optim_flags(tc, tc_optim);
    add_common(tc, tc_common);
    tc->callback([&] {
        action = [&] {
            const SequenceLimits limits;
            const auto train_text = load_corpus(tc_train, limits).examples;
            const fs::path vpath = tc_model.vocab.empty() ? default_vocab_path(tc_out) : fs::path(tc_model.vocab);
            const Vocab vocab = vocab_for_training(vpath, train_text, tc_model.min_count, err);
            const Dataset train = encode_corpus(train_text, vocab, limits);
            const Dataset dev = load_dataset(tc_dev, vocab, limits);
            TrainConfig cfg;
            cfg.max_epochs = tc_max_epochs;
            cfg.patience = tc_patience;
            cfg.batch_size = tc_optim.batch;
            cfg.adam.learning_rate = tc_optim.lr;
            cfg.clip_norm = tc_optim.clip;
            cfg.seed = tc_common.seed;
            cfg.workers = tc_common.workers;
            const Tensor emb = make_embeddings(tc_model, vocab, tc_common.seed);
            ClassifierRun run = train_classifier(train.examples, dev.examples, emb, {tc_model.hidden, limits}, cfg,
                                                 err_logger(err));
            save_classifier(run.model, {vocab.hash(), tc_common.seed, run.history.best_epoch}, tc_out,
                            tc_optim.f32 ? Dtype::F32 : Dtype::F64);
            err << "best epoch " << run.history.best_epoch << ", saved " << tc_out << '\n';
            return kExitOk;
        };
    });

    // train-generator
    Common tg_common;
    ModelFlags tg_model;
    OptimFlags tg_optim;
    std::string tg_train, tg_out, tg_kind = "att-embed";
    std::size_t tg_latent = 8, tg_epochs = 20;
    bool tg_scalar_sigma = false;
    auto* tg = app.add_subcommand("train-generator", "Train a hypothesis generator for a fixed number of epochs");
    tg->add_option("--train", tg_train, "Training JSONL")->required();
    tg->add_option("--out", tg_out, "Output checkpoint")->required();
    tg->add_option("--model", tg_kind, "att-embed, base-embed, encdec or vae-encdec");
    tg->add_option("--latent-dim", tg_latent, "Latent size z")->check(CLI::PositiveNumber);
    tg->add_option("--epochs", tg_epochs, "Training epochs")->check(CLI::PositiveNumber);
    tg->add_flag("--scalar-sigma", tg_scalar_sigma, "Use one sampling std for all latent dimensions");
    add_model_flags(tg, tg_model);
    add_optim_flags(tg, tg_optim);
    add_common(tg, tg_common);
    tg->callback([&] {
        action = [&] {
            const GeneratorKind kind = parse_kinds(tg_kind).front();
            const SequenceLimits limits;
            const auto train_text = load_corpus(tg_train, limits).examples;
            const fs::path vpath = tg_model.vocab.empty() ? default_vocab_path(tg_out) : fs::path(tg_model.vocab);
            const Vocab vocab = vocab_for_training(vpath, train_text, tg_model.min_count, err);
            const Dataset train = encode_corpus(train_text, vocab, limits);
            TrainConfig cfg;
            cfg.epochs = tg_epochs;
            cfg.batch_size = tg_optim.batch;
            cfg.adam.learning_rate = tg_optim.lr;
            cfg.clip_norm = tg_optim.clip;
            cfg.seed = tg_common.seed;
            cfg.per_dimension_sigma = !tg_scalar_sigma;
            GeneratorConfig gc;
            gc.kind = kind;
            gc.hidden = tg_model.hidden;
            gc.latent = tg_latent;
            gc.limits = limits;
            const Tensor emb = make_embeddings(tg_model, vocab, tg_common.seed);
            GeneratorRun run = train_generator(train.examples, emb, gc, cfg, err_logger(err));
            save_generator(run.model, {vocab.hash(), tg_common.seed, tg_epochs}, tg_out,
                           tg_optim.f32 ? Dtype::F32 : Dtype::F64);
            err << "saved " << tg_out << '\n';
            return kExitOk;
        };
    });

    // generate
    Common gn_common;
    std::string gn_ckpt, gn_source, gn_out, gn_vocab;
    std::size_t gn_beam = 1;
    double gn_oversample = 1.0;
    bool gn_allow_oov = false;
    auto* gn = app.add_subcommand("generate", "Generate hypotheses for every premise and label of a dataset");
    gn->add_option("--checkpoint", gn_ckpt, "Generator checkpoint")->required();
    gn->add_option("--source", gn_source, "Source JSONL (premises and labels)")->required();
    gn->add_option("--out", gn_out, "Output JSONL")->required();
    gn->add_option("--vocab", gn_vocab, "Vocabulary file; looked up beside the checkpoint when empty");
    gn->add_option("--beam", gn_beam, "Beam size (1 = greedy)")->check(CLI::PositiveNumber);
    gn->add_option("--oversample", gn_oversample, "Passes over the source (rounded up)")->check(CLI::Range(1.0, 1e6));
    gn->add_flag("--allow-oov", gn_allow_oov, "Allow the <oov> token in generated hypotheses");
    add_common(gn, gn_common);
    gn->callback([&] {
        action = [&] {
            const Vocab vocab = resolve_vocab(gn_vocab, gn_ckpt);
            ModelMeta meta;
            const Generator gen = load_generator(gn_ckpt, vocab.hash(), &meta);
            const Dataset source = load_dataset(gn_source, vocab, gen.config().limits);
            GenerateOptions go;
            go.generation.beam_k = gn_beam;
            go.generation.max_len = gen.config().limits.hypothesis;
            go.generation.seed = gn_common.seed;
            if (!gn_allow_oov) go.generation.banned = {kOovId};
            go.oversample = gn_oversample;
            go.workers = gn_common.workers;
            const Dataset generated = generate_dataset(gen, source, go);
            write_dataset(gn_out, generated, vocab);
            err << "wrote " << generated.size() << " examples to " << gn_out << '\n';
            return kExitOk;
        };
    });

    // filter
    Common fl_common;
    std::string fl_dataset, fl_judge, fl_out, fl_vocab, fl_probs;
    double fl_threshold = 0.6;
    std::size_t fl_balance = 0;
    auto* fl = app.add_subcommand("filter", "Keep examples whose label the judge assigns probability above t");
    fl->add_option("--dataset", fl_dataset, "Generated JSONL")->required();
    fl->add_option("--judge", fl_judge, "Judge classifier checkpoint")->required();
    fl->add_option("--out", fl_out, "Output JSONL")->required();
    fl->add_option("--vocab", fl_vocab, "Vocabulary file; looked up beside the judge when empty");
    fl->add_option("--threshold", fl_threshold, "Threshold t in [0, 1); canonical values 0.0,0.3,0.6,0.9")
        ->check(CLI::Range(0.0, 1.0));
    fl->add_option("--balance-to", fl_balance, "Balance labels and trim to this size (0 = keep all)");
    fl->add_option("--probs-out", fl_probs, "Write the judge probability of every input example (JSON)");
    add_common(fl, fl_common);
    fl->callback([&] {
        action = [&] {
            if (fl_threshold >= 1.0) throw UsageError("--threshold must be below 1");
            const Vocab vocab = resolve_vocab(fl_vocab, fl_judge);
            const Classifier judge = load_classifier(fl_judge, vocab.hash());
            const Dataset data = load_dataset(fl_dataset, vocab, judge.config().limits);
            FilterResult r = filter_dataset(data, judge, fl_threshold, fl_common.workers);
            Dataset kept = fl_balance ? balance_and_trim(r.kept, fl_balance) : r.kept;
            write_dataset(fl_out, kept, vocab);
            if (!fl_probs.empty()) write_file_atomic(fl_probs, json(r.label_probs).dump() + "\n");
            err << "kept " << r.kept.size() << " of " << data.size() << ", wrote " << kept.size() << '\n';
            return kExitOk;
        };
    });

    // evaluate
    Common ev_common;
    std::string ev_dataset, ev_judge, ev_vocab, ev_reference, ev_generator, ev_disc;
    bool ev_table = false;
    auto* ev = app.add_subcommand("evaluate", "Print metrics of a dataset as JSON");
    ev->add_option("--dataset", ev_dataset, "JSONL to evaluate")->required();
    ev->add_option("--judge", ev_judge, "Judge classifier checkpoint")->required();
    ev->add_option("--vocab", ev_vocab, "Vocabulary file; looked up beside the judge when empty");
    ev->add_option("--reference", ev_reference, "Original JSONL for ROUGE-L, METEOR and the discriminator");
    ev->add_option("--generator", ev_generator, "Generator checkpoint for per-token NLL of --dataset");
    ev->add_option("--discriminator", ev_disc, "Discriminator checkpoint (needs --reference)");
    ev->add_flag("--table", ev_table, "Print an aligned table instead of JSON");
    add_common(ev, ev_common);
    ev->callback([&] {
        action = [&] {
            if (!ev_disc.empty() && ev_reference.empty()) throw UsageError("--discriminator needs --reference");
            const Vocab vocab = resolve_vocab(ev_vocab, ev_judge);
            const Classifier judge = load_classifier(ev_judge, vocab.hash());
            const SequenceLimits limits = judge.config().limits;
            const Dataset data = load_dataset(ev_dataset, vocab, limits);
            MetricRow row;
            row.dataset = fs::path(ev_dataset).filename().string();
            row.size = data.size();
            row.data_accuracy = dataset_label_accuracy(data.examples, judge);
            std::optional<Dataset> reference;
            if (!ev_reference.empty()) reference = load_dataset(ev_reference, vocab, limits);
            if (reference) {
                // Generated rows are matched to their source by origin_index.
                std::vector<Example> refs;
                for (std::size_t i = 0; i < data.size(); ++i) {
                    const std::size_t k = data.examples[i].origin_index.value_or(i);
                    if (k >= reference->size()) throw std::runtime_error("reference has no example " + std::to_string(k));
                    refs.push_back(reference->examples[k]);
                }
                row.similarity = mean_text_similarity(data.examples, refs);
            } else {
                row.similarity = mean_text_similarity(data.examples);
            }
            if (!ev_generator.empty()) {
                const Generator gen = load_generator(ev_generator, vocab.hash());
                row.nll = mean_token_nll(gen, data.examples, LatentSource::Sampled, ev_common.seed);
            }
            if (!ev_disc.empty()) {
                const Discriminator disc = load_discriminator(ev_disc, vocab.hash());
                const std::size_t n = std::min(reference->size(), data.size());
                row.discriminator_error = discriminator_error_rate(
                    disc, std::span<const Example>(reference->examples).first(n),
                    std::span<const Example>(data.examples).first(n), ev_common.seed);
            }
            MetricReport report;
            report.meta["judge_sha1"] = file_sha1(ev_judge);
            report.meta["seed"] = std::to_string(ev_common.seed);
            report.rows.push_back(row);
            out << (ev_table ? report.to_table() : report.to_json());
            return kExitOk;
        };
    });

    // discriminate
    Common ds_common;
    ModelFlags ds_model;
    OptimFlags ds_optim;
    std::string ds_original, ds_generated, ds_out, ds_eval_original, ds_eval_generated;
    std::size_t ds_epochs = 5;
    auto* ds = app.add_subcommand("discriminate", "Train a discriminator between original and generated hypotheses");
    ds->add_option("--original", ds_original, "Original JSONL")->required();
    ds->add_option("--generated", ds_generated, "Generated JSONL")->required();
    ds->add_option("--out", ds_out, "Output checkpoint")->required();
    ds->add_option("--epochs", ds_epochs, "Training epochs")->check(CLI::PositiveNumber);
    ds->add_option("--eval-original", ds_eval_original, "Held-out original JSONL for the error rate");
    ds->add_option("--eval-generated", ds_eval_generated, "Held-out generated JSONL for the error rate");
    add_model_flags(ds, ds_model);
    add_optim_flags(ds, ds_optim);
    add_common(ds, ds_common);
    ds->callback([&] {
        action = [&] {
            if (ds_eval_original.empty() != ds_eval_generated.empty())
                throw UsageError("--eval-original and --eval-generated go together");
            const SequenceLimits limits;
            const auto orig_text = load_corpus(ds_original, limits).examples;
            const fs::path vpath = ds_model.vocab.empty() ? default_vocab_path(ds_out) : fs::path(ds_model.vocab);
            const Vocab vocab = vocab_for_training(vpath, orig_text, ds_model.min_count, err);
            const Dataset original = encode_corpus(orig_text, vocab, limits);
            const Dataset generated = load_dataset(ds_generated, vocab, limits);
            TrainConfig cfg;
            cfg.epochs = ds_epochs;
            cfg.batch_size = ds_optim.batch;
            cfg.adam.learning_rate = ds_optim.lr;
            cfg.clip_norm = ds_optim.clip;
            cfg.seed = ds_common.seed;
            const Tensor emb = make_embeddings(ds_model, vocab, ds_common.seed);
            DiscriminatorRun run = train_discriminator(original.examples, generated.examples, emb,
                                                       {ds_model.hidden, limits.hypothesis}, cfg, err_logger(err));
            save_discriminator(run.model, {vocab.hash(), ds_common.seed, ds_epochs}, ds_out,
                               ds_optim.f32 ? Dtype::F32 : Dtype::F64);
            if (!ds_eval_original.empty()) {
                const Dataset eo = load_dataset(ds_eval_original, vocab, limits);
                const Dataset eg = load_dataset(ds_eval_generated, vocab, limits);
                const std::size_t n = std::min(eo.size(), eg.size());
                const double rate = discriminator_error_rate(run.model, std::span<const Example>(eo.examples).first(n),
                                                             std::span<const Example>(eg.examples).first(n),
                                                             ds_common.seed);
                json j;
                j["disc_error_rate"] = rate;
                j["pairs"] = n;
                out << j.dump(2) << '\n';
            }
            return kExitOk;
        };
    });

    // pipeline
    Common pl_common;
    ModelFlags pl_model;
    OptimFlags pl_optim;
    std::string pl_train, pl_dev, pl_test, pl_out, pl_kinds = "att-embed", pl_latent = "8",
                                                   pl_thresholds = "0.0,0.3,0.6,0.9";
    std::size_t pl_epochs = 20, pl_max_epochs = 100, pl_patience = 3, pl_beam = 1, pl_disc_epochs = 5;
    double pl_oversample = 3.0;
    std::optional<std::size_t> pl_gen_batch;
    std::optional<double> pl_gen_lr;
    bool pl_merged = false, pl_undersized = false, pl_no_resume = false, pl_scalar_sigma = false;
    auto* pl = app.add_subcommand("pipeline", "Run the full train, generate, filter and evaluate flow");
    pl->add_option("--train", pl_train, "Original training JSONL")->required();
    pl->add_option("--dev", pl_dev, "Original development JSONL")->required();
    pl->add_option("--test", pl_test, "Original test JSONL")->required();
    pl->add_option("--out", pl_out, "Run directory")->required();
    pl->add_option("--model", pl_kinds, "Comma-separated generator kinds");
    pl->add_option("--latent-dim", pl_latent, "Comma-separated latent sizes z");
    pl->add_option("--thresholds", pl_thresholds, "Comma-separated filter thresholds");
    pl->add_option("--epochs", pl_epochs, "Generator epochs")->check(CLI::PositiveNumber);
    pl->add_option("--max-epochs", pl_max_epochs, "Classifier epoch limit")->check(CLI::PositiveNumber);
    pl->add_option("--patience", pl_patience, "Classifier early-stopping patience")->check(CLI::PositiveNumber);
    pl->add_option("--disc-epochs", pl_disc_epochs, "Discriminator epochs")->check(CLI::PositiveNumber);
    pl->add_option("--generator-batch", pl_gen_batch, "Generator mini-batch size (default --batch)")
        ->check(CLI::PositiveNumber);
    pl->add_option("--generator-lr", pl_gen_lr, "Generator learning rate (default --lr)")->check(CLI::PositiveNumber);
    pl->add_option("--beam", pl_beam, "Beam size (1 = greedy)")->check(CLI::PositiveNumber);
    pl->add_option("--oversample", pl_oversample, "Generation passes over each split (rounded up)")
        ->check(CLI::Range(1.0, 1e6));
    pl->add_flag("--merged", pl_merged, "Also train on original + filtered generated data");
    pl->add_flag("--allow-undersized", pl_undersized, "Trim to the largest balanced size instead of failing");
    pl->add_flag("--no-resume", pl_no_resume, "Retrain even when checkpoints exist in the run directory");
    pl->add_flag("--scalar-sigma", pl_scalar_sigma, "Use one sampling std for all latent dimensions");
    add_model_flags(pl, pl_model, false);
    add_optim_flags(pl, pl_optim);
    add_common(pl, pl_common);
    pl->callback([&] {
        action = [&] {
            PipelineConfig cfg;
            cfg.kinds = parse_kinds(pl_kinds);
            cfg.latent_dims = parse_sizes(pl_latent, "--latent-dim");
            cfg.thresholds = parse_doubles(pl_thresholds, "--thresholds");
            for (double t : cfg.thresholds)
                if (!(t >= 0.0 && t < 1.0)) throw UsageError("thresholds must lie in [0, 1)");
            cfg.hidden = pl_model.hidden;
            cfg.embed_dim = pl_model.embed_dim;
            if (!pl_model.embeddings.empty()) cfg.embeddings_path = pl_model.embeddings;
            cfg.min_count = pl_model.min_count;
            cfg.train.epochs = pl_epochs;
            cfg.train.max_epochs = pl_max_epochs;
            cfg.train.patience = pl_patience;
            cfg.train.batch_size = pl_optim.batch;
            cfg.train.adam.learning_rate = pl_optim.lr;
            cfg.generator_batch_size = pl_gen_batch;
            cfg.generator_learning_rate = pl_gen_lr;
            cfg.train.clip_norm = pl_optim.clip;
            cfg.train.seed = pl_common.seed;
            cfg.train.per_dimension_sigma = !pl_scalar_sigma;
            cfg.discriminator_epochs = pl_disc_epochs;
            cfg.oversample = pl_oversample;
            cfg.beam = pl_beam;
            cfg.workers = pl_common.workers;
            cfg.merged_experiment = pl_merged;
            cfg.allow_undersized = pl_undersized;
            cfg.resume = !pl_no_resume;
            cfg.f32_checkpoints = pl_optim.f32;
            const PipelineInputs inputs = load_pipeline_inputs(pl_train, pl_dev, pl_test, cfg.limits);
            const PipelineResult r = run_full_pipeline(inputs, cfg, pl_out, err_logger(err));
            out << r.report.to_table();
            return kExitOk;
        };
    });

    try {
        std::vector<std::string> args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        return action ? action() : kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace nligen
