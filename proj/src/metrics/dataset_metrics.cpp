#include "nligen/metrics/dataset_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nligen/generation/decode.hpp"
#include "nligen/metrics/text_metrics.hpp"
#include "nligen/numerics/random.hpp"

namespace nligen {

LabelAccuracy dataset_label_accuracy(std::span<const Example> data, const Classifier& judge) {
    if (data.empty()) throw std::invalid_argument("dataset_label_accuracy: empty dataset");
    LabelAccuracy out;
    std::array<std::size_t, kLabelCount> hits{};
    std::size_t correct = 0;
    for (const Example& ex : data) {
        const std::size_t gold = label_index(ex.label);
        ++out.label_counts[gold];
        if (predicted_label(judge.classify(ex)) == gold) {
            ++hits[gold];
            ++correct;
        }
    }
    out.total = data.size();
    out.overall = static_cast<double>(correct) / static_cast<double>(data.size());
    for (std::size_t l = 0; l < kLabelCount; ++l) {
        if (out.label_counts[l] > 0)
            out.per_label[l] = static_cast<double>(hits[l]) / static_cast<double>(out.label_counts[l]);
    }
    return out;
}

TextSimilarity mean_text_similarity(std::span<const Example> data, std::span<const Example> reference) {
    if (!reference.empty() && reference.size() != data.size())
        throw std::invalid_argument("mean_text_similarity: " + std::to_string(data.size()) + " examples vs " +
                                    std::to_string(reference.size()) + " references");
    TextSimilarity out;
    if (data.empty()) return out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.jaccard += jaccard_distance(data[i].premise, data[i].hypothesis);
        if (!reference.empty()) {
            out.rouge_l += rouge_l(data[i].hypothesis, reference[i].hypothesis);
            out.meteor += meteor_lite(data[i].hypothesis, reference[i].hypothesis);
        }
    }
    const auto n = static_cast<double>(data.size());
    out.jaccard /= n;
    out.rouge_l /= n;
    out.meteor /= n;
    return out;
}

double mean_token_nll(const Generator& gen, std::span<const Example> data, LatentSource source, std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("mean_token_nll: empty dataset");
    const GeneratorKind kind = gen.kind();
    std::optional<Vec> sigma;
    if (uses_latent_table(kind) && source == LatentSource::Sampled) {
        sigma = gen.latent_sigma();
        if (!sigma) sigma = gen.estimate_latent_sigma({}, true);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Example& ex = data[i];
        Vec z;
        if (uses_latent_table(kind)) {
            if (source == LatentSource::Table) {
                z = gen.table_row(i);
            } else {
                Rng rng(derive_seed(seed, "nll", i));
                z = sample_latent(*sigma, rng);
            }
        } else {
            z = gen.encode_latent(ex);
        }
        const Generator::Loss l = gen.decode_loss(ex, z);
        sum += l.nll / static_cast<double>(l.tokens);
    }
    return sum / static_cast<double>(data.size());
}

double discriminator_error_rate(const Discriminator& disc, std::span<const Example> original,
                                std::span<const Example> generated, std::uint64_t seed) {
    if (original.size() != generated.size())
        throw std::invalid_argument("discriminator_error_rate: " + std::to_string(original.size()) +
                                    " original vs " + std::to_string(generated.size()) + " generated");
    if (original.empty()) throw std::invalid_argument("discriminator_error_rate: empty sets");
    std::vector<std::size_t> perm(generated.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, "disc-pairing", 0));
    rng.shuffle(perm.begin(), perm.end());
    std::size_t errors = 0;
    for (std::size_t j : perm) {
        if (disc.score(original[j].hypothesis) <= disc.score(generated[j].hypothesis)) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(original.size());
}

namespace {

using nlohmann::json;

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

json label_accuracy_json(const LabelAccuracy& a) {
    json j;
    j["overall"] = a.overall;
    j["total"] = a.total;
    for (Label l : kAllLabels) {
        j["per_label"][std::string(to_string(l))] = a.per_label[label_index(l)];
        j["label_counts"][std::string(to_string(l))] = a.label_counts[label_index(l)];
    }
    return j;
}

LabelAccuracy label_accuracy_from(const json& j) {
    LabelAccuracy a;
    a.overall = j.at("overall").get<double>();
    a.total = j.at("total").get<std::size_t>();
    for (Label l : kAllLabels) {
        a.per_label[label_index(l)] = j.at("per_label").at(std::string(to_string(l))).get<double>();
        a.label_counts[label_index(l)] = j.at("label_counts").at(std::string(to_string(l))).get<std::size_t>();
    }
    return a;
}

template <class T>
std::optional<T> opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

std::string fmt(const std::optional<double>& v, int precision = 4) {
    if (!v) return "-";
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << *v;
    return os.str();
}

} // namespace

std::string MetricReport::to_json(int indent) const {
    json rows_json = json::array();
    for (const MetricRow& r : rows) {
        json j;
        j["dataset"] = r.dataset;
        put(j, "model", r.model);
        put(j, "latent", r.latent);
        put(j, "threshold", r.threshold);
        put(j, "acc_at_t", r.accuracy_at_t);
        put(j, "acc_generated_dev", r.accuracy_generated_dev);
        if (r.data_accuracy) j["acc_data"] = label_accuracy_json(*r.data_accuracy);
        if (r.similarity) {
            j["jaccard"] = r.similarity->jaccard;
            j["rouge_l"] = r.similarity->rouge_l;
            j["meteor"] = r.similarity->meteor;
        }
        put(j, "nll_per_token", r.nll);
        put(j, "disc_error_rate", r.discriminator_error);
        put(j, "size", r.size);
        rows_json.push_back(std::move(j));
    }
    json root;
    root["meta"] = meta;
    root["rows"] = std::move(rows_json);
    return root.dump(indent) + "\n";
}

MetricReport MetricReport::from_json(const std::string& text) {
    const json root = json::parse(text);
    MetricReport report;
    if (root.contains("meta")) report.meta = root.at("meta").get<std::map<std::string, std::string>>();
    for (const json& j : root.at("rows")) {
        MetricRow r;
        r.dataset = j.at("dataset").get<std::string>();
        r.model = opt<std::string>(j, "model");
        r.latent = opt<std::size_t>(j, "latent");
        r.threshold = opt<double>(j, "threshold");
        r.accuracy_at_t = opt<double>(j, "acc_at_t");
        r.accuracy_generated_dev = opt<double>(j, "acc_generated_dev");
        if (j.contains("acc_data")) r.data_accuracy = label_accuracy_from(j.at("acc_data"));
        if (j.contains("jaccard")) {
            r.similarity = TextSimilarity{j.at("jaccard").get<double>(), j.at("rouge_l").get<double>(),
                                          j.at("meteor").get<double>()};
        }
        r.nll = opt<double>(j, "nll_per_token");
        r.discriminator_error = opt<double>(j, "disc_error_rate");
        r.size = opt<std::size_t>(j, "size");
        report.rows.push_back(std::move(r));
    }
    return report;
}

std::string MetricReport::to_table() const {
    const std::vector<std::string> header = {"dataset", "t", "acc@t", "acc-gen-dev", "acc-data", "nll/token", "disc-er", "size"};
    std::vector<std::vector<std::string>> cells;
    cells.push_back(header);
    for (const MetricRow& r : rows) {
        std::optional<double> acc_data;
        if (r.data_accuracy) acc_data = r.data_accuracy->overall;
        cells.push_back({r.dataset, fmt(r.threshold, 1), fmt(r.accuracy_at_t), fmt(r.accuracy_generated_dev), fmt(acc_data), fmt(r.nll),
                         fmt(r.discriminator_error), r.size ? std::to_string(*r.size) : "-"});
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0)
                os << std::left << std::setw(static_cast<int>(width[c])) << row[c];
            else
                os << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
        }
        os << '\n';
    }
    return os.str();
}

} // namespace nligen
