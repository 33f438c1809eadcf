#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nligen/data/example.hpp"
#include "nligen/models/classifier.hpp"
#include "nligen/models/discriminator.hpp"
#include "nligen/models/generator.hpp"
#include "nligen/numerics/adam.hpp"

namespace nligen {

struct TrainConfig {
    std::size_t epochs = 20;      // generator and discriminator: fixed count
    std::size_t max_epochs = 100; // classifier: upper bound under early stopping
    std::size_t patience = 3;
    std::size_t batch_size = 64;
    AdamConfig adam;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
    bool per_dimension_sigma = true;
    std::size_t workers = 1; // evaluation passes only

    // Throws std::invalid_argument on a zero count or a bad optimizer setting.
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    std::optional<double> dev_loss;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0; // classifier: epoch of the retained snapshot
    bool stopped_early = false;
};

// Tracks the best loss seen; stops after `patience` epochs without a strict
// improvement.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience);

    // Returns true when loss improves on the best so far.
    bool update(double loss);
    bool should_stop() const { return stale_ >= patience_; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t stale_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

using TrainLogger = std::function<void(const std::string&)>;

struct ClassifierRun {
    Classifier model; // best-dev-loss snapshot
    TrainHistory history;
};

// Mean cross-entropy over the set.
double mean_classifier_loss(const Classifier& model, std::span<const Example> data, std::size_t workers = 1);

// Mini-batch Adam with early stopping on dev loss. Throws std::invalid_argument
// on empty sets and std::runtime_error naming the epoch if the loss diverges.
ClassifierRun train_classifier(std::span<const Example> train, std::span<const Example> dev,
                               const Tensor& embeddings, const ClassifierConfig& model_cfg, const TrainConfig& cfg,
                               const TrainLogger& log = {});

struct GeneratorRun {
    Generator model; // final epoch, latent_sigma set
    TrainHistory history; // train_loss = mean per-token NLL of the epoch
};

// Fixed number of epochs; table_rows is taken from the training set size.
GeneratorRun train_generator(std::span<const Example> train, const Tensor& embeddings, GeneratorConfig model_cfg,
                             const TrainConfig& cfg, const TrainLogger& log = {});

struct DiscriminatorRun {
    Discriminator model;
    TrainHistory history;
};

// Each epoch pairs original[i] with a shuffled generated hypothesis.
DiscriminatorRun train_discriminator(std::span<const Example> original, std::span<const Example> generated,
                                     const Tensor& embeddings, const DiscriminatorConfig& model_cfg,
                                     const TrainConfig& cfg, const TrainLogger& log = {});

} // namespace nligen
