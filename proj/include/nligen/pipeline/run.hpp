#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nligen/data/corpus.hpp"
#include "nligen/metrics/dataset_metrics.hpp"
#include "nligen/models/generator.hpp"
#include "nligen/pipeline/train.hpp"

namespace nligen {

inline const std::vector<double> kDefaultThresholds = {0.0, 0.3, 0.6, 0.9};

struct PipelineConfig {
    std::vector<GeneratorKind> kinds{GeneratorKind::AttEmbed};
    std::vector<std::size_t> latent_dims{8};
    std::vector<double> thresholds = kDefaultThresholds;
    std::size_t hidden = 150;
    std::size_t embed_dim = 50;
    std::optional<std::string> embeddings_path; // random vectors when absent
    std::size_t min_count = 1;
    SequenceLimits limits;
    TrainConfig train;                  // generator epochs, classifier max/patience, batch, optimizer, seed
    // Generator-only overrides of train.batch_size and the learning rate.
    std::optional<std::size_t> generator_batch_size;
    std::optional<double> generator_learning_rate;
    std::size_t discriminator_epochs = 5;
    double oversample = 3.0;
    std::size_t beam = 1;
    std::size_t workers = 1;
    bool merged_experiment = false;
    // Trim to the largest balanced size when a filtered set cannot reach the
    // original size, instead of failing.
    bool allow_undersized = false;
    bool resume = true; // reuse checkpoints already in the run directory
    bool f32_checkpoints = false;

    void validate() const;
    // Everything except the worker count, which does not affect results.
    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
};

struct PipelineInputs {
    std::vector<TextExample> train, dev, test;
    std::map<std::string, std::string> source_hashes; // split name -> content SHA-1
};

PipelineInputs load_pipeline_inputs(const std::filesystem::path& train, const std::filesystem::path& dev,
                                    const std::filesystem::path& test, const SequenceLimits& limits);

class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& what)
        : std::runtime_error("pipeline stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct PipelineResult {
    MetricReport report;
    std::string judge_sha1;
    double judge_test_accuracy = 0.0;
};

// Writes into out_dir:
//   config.json, vocab.txt, log.txt, manifest.json
//   checkpoints/judge.nlig, generator-<tag>.nlig, discriminator-<tag>.nlig,
//               classifier-<tag>-t<t>.nlig, merged-<tag>-t<t>.nlig
//   datasets/generated-{train,dev}-<tag>.jsonl, filtered-{train,dev}-<tag>-t<t>.jsonl
//   reports/report.json, reports/report.txt
// where <tag> is "<kind>-z<z>". Throws PipelineError naming the failed stage;
// artifacts written before the failure stay in place.
PipelineResult run_full_pipeline(const PipelineInputs& inputs, const PipelineConfig& cfg,
                                 const std::filesystem::path& out_dir,
                                 const std::function<void(const std::string&)>& progress = {});

std::string threshold_tag(double t); // 0.6 -> "0.6"

} // namespace nligen
