#include "nligen/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "nligen/numerics/parallel.hpp"
#include "nligen/numerics/random.hpp"

namespace nligen {

void TrainConfig::validate() const {
    if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs must be positive");
    if (max_epochs == 0) throw std::invalid_argument("TrainConfig: max_epochs must be positive");
    if (patience == 0) throw std::invalid_argument("TrainConfig: patience must be at least 1");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("TrainConfig: clip_norm must be positive");
    adam.validate();
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
    if (patience == 0) throw std::invalid_argument("EarlyStopping: patience must be at least 1");
}

bool EarlyStopping::update(double loss) {
    ++epoch_;
    if (loss < best_) {
        best_ = loss;
        best_epoch_ = epoch_;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << v;
    return os.str();
}

[[noreturn]] void diverged(const char* who, std::size_t epoch, const std::string& detail) {
    throw std::runtime_error(std::string(who) + ": training diverged at epoch " + std::to_string(epoch) + " (" +
                             detail + ")");
}

// Runs one epoch of shuffled mini-batches. step(i, scale) accumulates the
// gradient of example i scaled by 1/|batch| and returns its loss.
template <class Step>
double run_epoch(std::size_t n, std::size_t epoch, const TrainConfig& cfg, const char* who, ParamStore& store,
                 Step&& step) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, std::string(who) + "/shuffle", epoch));
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
        const std::size_t end = std::min(n, begin + cfg.batch_size);
        const double scale = 1.0 / static_cast<double>(end - begin);
        for (std::size_t k = begin; k < end; ++k) {
            const double loss = step(order[k], scale);
            if (!std::isfinite(loss)) diverged(who, epoch, "non-finite loss");
            total += loss;
        }
        store.clip_grad_norm(cfg.clip_norm);
        try {
            adam_step(store, cfg.adam);
        } catch (const std::domain_error& e) {
            diverged(who, epoch, e.what());
        }
    }
    return total / static_cast<double>(n);
}

} // namespace

double mean_classifier_loss(const Classifier& model, std::span<const Example> data, std::size_t workers) {
    if (data.empty()) throw std::invalid_argument("mean_classifier_loss: empty dataset");
    std::vector<double> losses(data.size());
    parallel_for(data.size(), workers, [&](std::size_t i) { losses[i] = model.loss(data[i]); });
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(data.size());
}

ClassifierRun train_classifier(std::span<const Example> train, std::span<const Example> dev,
                               const Tensor& embeddings, const ClassifierConfig& model_cfg, const TrainConfig& cfg,
                               const TrainLogger& log) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("train_classifier: empty training set");
    if (dev.empty()) throw std::invalid_argument("train_classifier: empty development set");
    Classifier model(embeddings, model_cfg, derive_seed(cfg.seed, "classifier/init"));
    ClassifierRun run{model, {}};
    EarlyStopping stopper(cfg.patience);
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double train_loss = run_epoch(train.size(), epoch, cfg, "classifier", model.params(),
                                            [&](std::size_t i, double s) { return model.loss_and_backward(train[i], s); });
        const double dev_loss = mean_classifier_loss(model, dev, cfg.workers);
        if (!std::isfinite(dev_loss)) diverged("classifier", epoch, "non-finite dev loss");
        run.history.epochs.push_back({epoch, train_loss, dev_loss});
        if (log) log("classifier epoch " + std::to_string(epoch) + " train " + fmt(train_loss) + " dev " + fmt(dev_loss));
        if (stopper.update(dev_loss)) run.model = model;
        if (stopper.should_stop()) {
            run.history.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    run.history.best_epoch = stopper.best_epoch();
    return run;
}

GeneratorRun train_generator(std::span<const Example> train, const Tensor& embeddings, GeneratorConfig model_cfg,
                             const TrainConfig& cfg, const TrainLogger& log) {
    cfg.validate();
    if (model_cfg.latent == 0) throw std::invalid_argument("train_generator: latent dimension must be positive");
    if (train.empty()) throw std::invalid_argument("train_generator: empty training set");
    model_cfg.table_rows = uses_latent_table(model_cfg.kind) ? train.size() : 0;
    const std::string who = "generator/" + std::string(to_string(model_cfg.kind));
    GeneratorRun run{Generator(embeddings, model_cfg, derive_seed(cfg.seed, who + "/init")), {}};
    Generator& model = run.model;
    const bool vae = model_cfg.kind == GeneratorKind::VaeEncDec;
    const auto z = static_cast<Eigen::Index>(model_cfg.latent);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng eps_rng(derive_seed(cfg.seed, who + "/epsilon", epoch));
        double token_nll = 0.0;
        double kl = 0.0;
        run_epoch(train.size(), epoch, cfg, who.c_str(), model.params(), [&](std::size_t i, double s) {
            Vec eps;
            if (vae) {
                eps.resize(z);
                for (Eigen::Index k = 0; k < z; ++k) eps[k] = eps_rng.normal();
            }
            const Generator::Loss l = model.loss_and_backward(train[i], i, vae ? &eps : nullptr, s);
            token_nll += l.nll / static_cast<double>(l.tokens);
            kl += l.kl;
            return l.total();
        });
        const double mean_nll = token_nll / static_cast<double>(train.size());
        run.history.epochs.push_back({epoch, mean_nll, std::nullopt});
        if (log) {
            std::string line = who + " epoch " + std::to_string(epoch) + " nll/token " + fmt(mean_nll);
            if (vae) line += " kl " + fmt(kl / static_cast<double>(train.size()));
            log(line);
        }
    }
    run.history.best_epoch = cfg.epochs;
    model.set_latent_sigma(model.estimate_latent_sigma(train, cfg.per_dimension_sigma));
    return run;
}

DiscriminatorRun train_discriminator(std::span<const Example> original, std::span<const Example> generated,
                                     const Tensor& embeddings, const DiscriminatorConfig& model_cfg,
                                     const TrainConfig& cfg, const TrainLogger& log) {
    cfg.validate();
    if (original.empty() || generated.empty())
        throw std::invalid_argument("train_discriminator: both sets must be non-empty");
    DiscriminatorRun run{Discriminator(embeddings, model_cfg, derive_seed(cfg.seed, "discriminator/init")), {}};
    Discriminator& model = run.model;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> pairing(generated.size());
        std::iota(pairing.begin(), pairing.end(), 0);
        Rng rng(derive_seed(cfg.seed, "discriminator/pairing", epoch));
        rng.shuffle(pairing.begin(), pairing.end());
        const double loss = run_epoch(original.size(), epoch, cfg, "discriminator", model.params(),
                                      [&](std::size_t i, double s) {
                                          const Example& gen = generated[pairing[i % pairing.size()]];
                                          return model.loss_and_backward(original[i].hypothesis, gen.hypothesis, s);
                                      });
        run.history.epochs.push_back({epoch, loss, std::nullopt});
        if (log) log("discriminator epoch " + std::to_string(epoch) + " loss " + fmt(loss));
    }
    run.history.best_epoch = cfg.epochs;
    return run;
}

} // namespace nligen
