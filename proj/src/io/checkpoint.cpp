#include "nligen/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nligen/data/vocab.hpp"

namespace nligen {

namespace fs = std::filesystem;
using nlohmann::json;

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return &t;
    }
    return nullptr;
}

namespace {

template <class U>
void put_le(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw CheckpointError(CheckpointErrorCode::Truncated,
                                  std::string("checkpoint truncated at offset ") + std::to_string(pos_) +
                                      " while reading " + what,
                                  pos_);
        }
    }

    template <class U>
    U get(const char* what) {
        need(sizeof(U), what);
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    std::string get_string(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

[[noreturn]] void malformed(const std::string& what, std::size_t offset) {
    throw CheckpointError(CheckpointErrorCode::Malformed,
                          "malformed checkpoint at offset " + std::to_string(offset) + ": " + what, offset);
}

} // namespace

std::string encode_checkpoint(const Checkpoint& ckpt, Dtype dtype) {
    if (ckpt.tensors.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::length_error("checkpoint: too many tensors");
    std::string out(kCheckpointMagic, kMagicSize);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max())
            throw std::length_error("checkpoint: tensor name too long: " + name);
        if (t.rank() == 0 || t.rank() > std::numeric_limits<std::uint8_t>::max())
            throw std::invalid_argument("checkpoint: tensor " + name + " has unsupported rank");
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        out.push_back(static_cast<char>(dtype));
        out.push_back(static_cast<char>(t.rank()));
        for (std::size_t d : t.dims()) {
            if (d > std::numeric_limits<std::uint32_t>::max())
                throw std::length_error("checkpoint: dimension too large in " + name);
            put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        }
        for (double v : t.values()) {
            if (dtype == Dtype::F64)
                put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
            else
                put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    const std::string meta = ckpt.metadata.dump();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
    out += meta;
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < kMagicSize || bytes.compare(0, 6, kCheckpointMagic, 6) != 0) {
        throw CheckpointError(CheckpointErrorCode::NotACheckpoint, "not a checkpoint (bad magic)", 0);
    }
    if (bytes.compare(0, kMagicSize, kCheckpointMagic, kMagicSize) != 0) {
        throw CheckpointError(CheckpointErrorCode::Version,
                              "unsupported checkpoint version " + bytes.substr(6, 2) + " (expected 01)", 6);
    }
    Reader r(bytes);
    r.get_string(kMagicSize, "magic");
    Checkpoint ckpt;
    const auto count = r.get<std::uint32_t>("tensor count");
    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t start = r.offset();
        const auto name_len = r.get<std::uint16_t>("tensor name length");
        std::string name = r.get_string(name_len, "tensor name");
        if (!seen.insert(name).second) malformed("duplicate tensor " + name, start);
        const auto dtype = r.get<std::uint8_t>("dtype");
        if (dtype > 1) malformed("unknown dtype " + std::to_string(dtype) + " for " + name, r.offset() - 1);
        const auto rank = r.get<std::uint8_t>("rank");
        if (rank == 0) malformed("zero rank for " + name, r.offset() - 1);
        std::vector<std::size_t> dims;
        std::size_t total = 1;
        for (std::uint8_t k = 0; k < rank; ++k) {
            const auto d = r.get<std::uint32_t>("dimension");
            if (d == 0) malformed("zero dimension in " + name, r.offset() - 4);
            dims.push_back(d);
            if (total > (std::numeric_limits<std::size_t>::max() / 8) / d) malformed("tensor too large: " + name, start);
            total *= d;
        }
        const std::size_t width = dtype == 1 ? 8 : 4;
        r.need(total * width, ("values of " + name).c_str());
        std::vector<double> values(total);
        for (std::size_t k = 0; k < total; ++k) {
            if (dtype == 1)
                values[k] = std::bit_cast<double>(r.get<std::uint64_t>("value"));
            else
                values[k] = static_cast<double>(std::bit_cast<float>(r.get<std::uint32_t>("value")));
        }
        ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(dims), std::move(values)));
    }
    const auto meta_len = r.get<std::uint32_t>("metadata length");
    const std::size_t meta_at = r.offset();
    const std::string meta = r.get_string(meta_len, "metadata");
    try {
        ckpt.metadata = json::parse(meta);
    } catch (const json::exception& e) {
        malformed(std::string("metadata is not JSON: ") + e.what(), meta_at);
    }
    if (!r.at_end()) malformed("trailing bytes after metadata", r.offset());
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path, Dtype dtype) {
    const std::string bytes = encode_checkpoint(ckpt, dtype);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError(CheckpointErrorCode::Io, "cannot write checkpoint " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        if (!out) throw CheckpointError(CheckpointErrorCode::Io, "failed writing checkpoint " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw CheckpointError(CheckpointErrorCode::Io, "cannot move checkpoint into place at " + path.string());
    }
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointErrorCode::Io, "cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return decode_checkpoint(ss.str());
    } catch (const CheckpointError& e) {
        throw CheckpointError(e.code(), path.string() + ": " + e.what(), e.offset());
    }
}

json ModelMeta::to_json() const {
    json j;
    j["kind"] = kind;
    j["d"] = hidden;
    j["z"] = latent;
    j["e"] = embed_dim;
    j["vocab_size"] = vocab_size;
    j["premise_len"] = premise_len;
    j["hypothesis_len"] = hypothesis_len;
    j["table_rows"] = table_rows;
    j["vocab_hash"] = hash_hex(vocab_hash);
    j["seed"] = seed;
    j["epochs_trained"] = epochs_trained;
    return j;
}

ModelMeta ModelMeta::from_json(const json& j) {
    try {
        ModelMeta m;
        m.kind = j.at("kind").get<std::string>();
        m.hidden = j.at("d").get<std::size_t>();
        m.latent = j.at("z").get<std::size_t>();
        m.embed_dim = j.value("e", std::size_t{0});
        m.vocab_size = j.value("vocab_size", std::size_t{0});
        m.premise_len = j.value("premise_len", std::size_t{25});
        m.hypothesis_len = j.value("hypothesis_len", std::size_t{15});
        m.table_rows = j.value("table_rows", std::size_t{0});
        m.vocab_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
        m.seed = j.at("seed").get<std::uint64_t>();
        m.epochs_trained = j.at("epochs_trained").get<std::size_t>();
        return m;
    } catch (const std::exception& e) {
        throw CheckpointError(CheckpointErrorCode::Malformed, std::string("bad checkpoint metadata: ") + e.what());
    }
}

void verify_vocab_hash(const ModelMeta& meta, std::uint64_t expected) {
    if (meta.vocab_hash != expected) {
        throw CheckpointError(CheckpointErrorCode::VocabMismatch, "vocabulary hash mismatch: checkpoint has " +
                                                                      hash_hex(meta.vocab_hash) + ", vocabulary is " +
                                                                      hash_hex(expected));
    }
}

Checkpoint model_checkpoint(const ParamStore& store, const ModelMeta& meta) {
    Checkpoint ckpt;
    for (const ParamEntry& e : store.entries()) ckpt.tensors.emplace_back(e.name, e.value);
    ckpt.metadata = meta.to_json();
    return ckpt;
}

void restore_params(const Checkpoint& ckpt, ParamStore& store) {
    if (ckpt.tensors.size() != store.size()) {
        throw CheckpointError(CheckpointErrorCode::ModelMismatch,
                              "checkpoint has " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                                  std::to_string(store.size()));
    }
    for (const auto& [name, t] : ckpt.tensors) {
        if (!store.contains(name))
            throw CheckpointError(CheckpointErrorCode::ModelMismatch, "unexpected tensor " + name);
        Tensor& dst = store.value(name);
        if (!dst.same_shape(t)) {
            throw CheckpointError(CheckpointErrorCode::ModelMismatch,
                                  "tensor " + name + " has shape " + t.shape_string() + ", model expects " +
                                      dst.shape_string());
        }
        dst = t;
    }
}

namespace {

ModelMeta base_meta(const ParamStore& store, const ModelInfo& info) {
    ModelMeta m;
    const Tensor& emb = store.value("embeddings");
    m.vocab_size = emb.rows();
    m.embed_dim = emb.cols();
    m.vocab_hash = info.vocab_hash;
    m.seed = info.seed;
    m.epochs_trained = info.epochs_trained;
    return m;
}

struct Loaded {
    Checkpoint ckpt;
    ModelMeta meta;
    const Tensor* embeddings = nullptr;
};

Loaded open_model(const fs::path& path, std::optional<std::uint64_t> expected) {
    Loaded l;
    l.ckpt = load_checkpoint(path);
    l.meta = ModelMeta::from_json(l.ckpt.metadata);
    if (expected) verify_vocab_hash(l.meta, *expected);
    l.embeddings = l.ckpt.find("embeddings");
    if (!l.embeddings || l.embeddings->rank() != 2)
        throw CheckpointError(CheckpointErrorCode::ModelMismatch, path.string() + ": no embeddings matrix");
    return l;
}

void expect_kind(const ModelMeta& meta, bool ok, const char* wanted, const fs::path& path) {
    if (!ok) {
        throw CheckpointError(CheckpointErrorCode::ModelMismatch,
                              path.string() + ": checkpoint holds a " + meta.kind + " model, not a " + wanted);
    }
}

} // namespace

void save_classifier(const Classifier& model, const ModelInfo& info, const fs::path& path, Dtype dtype) {
    ModelMeta m = base_meta(model.params(), info);
    m.kind = "classifier";
    m.hidden = model.config().hidden;
    m.premise_len = model.config().limits.premise;
    m.hypothesis_len = model.config().limits.hypothesis;
    save_checkpoint(model_checkpoint(model.params(), m), path, dtype);
}

void save_generator(const Generator& model, const ModelInfo& info, const fs::path& path, Dtype dtype) {
    ModelMeta m = base_meta(model.params(), info);
    const GeneratorConfig& cfg = model.config();
    m.kind = std::string(to_string(cfg.kind));
    m.hidden = cfg.hidden;
    m.latent = cfg.latent;
    m.table_rows = cfg.table_rows;
    m.premise_len = cfg.limits.premise;
    m.hypothesis_len = cfg.limits.hypothesis;
    save_checkpoint(model_checkpoint(model.params(), m), path, dtype);
}

void save_discriminator(const Discriminator& model, const ModelInfo& info, const fs::path& path, Dtype dtype) {
    ModelMeta m = base_meta(model.params(), info);
    m.kind = "discriminator";
    m.hidden = model.config().hidden;
    m.hypothesis_len = model.config().hypothesis_length;
    save_checkpoint(model_checkpoint(model.params(), m), path, dtype);
}

Classifier load_classifier(const fs::path& path, std::optional<std::uint64_t> expected, ModelMeta* meta) {
    Loaded l = open_model(path, expected);
    expect_kind(l.meta, l.meta.kind == "classifier", "classifier", path);
    ClassifierConfig cfg;
    cfg.hidden = l.meta.hidden;
    cfg.limits = {l.meta.premise_len, l.meta.hypothesis_len};
    Classifier model(*l.embeddings, cfg, l.meta.seed);
    restore_params(l.ckpt, model.params());
    if (meta) *meta = l.meta;
    return model;
}

Generator load_generator(const fs::path& path, std::optional<std::uint64_t> expected, ModelMeta* meta) {
    Loaded l = open_model(path, expected);
    GeneratorConfig cfg;
    try {
        cfg.kind = generator_kind_from_string(l.meta.kind);
    } catch (const std::invalid_argument&) {
        expect_kind(l.meta, false, "generator", path);
    }
    cfg.hidden = l.meta.hidden;
    cfg.latent = l.meta.latent;
    cfg.table_rows = l.meta.table_rows;
    cfg.limits = {l.meta.premise_len, l.meta.hypothesis_len};
    Generator model(*l.embeddings, cfg, l.meta.seed);
    restore_params(l.ckpt, model.params());
    if (meta) *meta = l.meta;
    return model;
}

Discriminator load_discriminator(const fs::path& path, std::optional<std::uint64_t> expected, ModelMeta* meta) {
    Loaded l = open_model(path, expected);
    expect_kind(l.meta, l.meta.kind == "discriminator", "discriminator", path);
    DiscriminatorConfig cfg;
    cfg.hidden = l.meta.hidden;
    cfg.hypothesis_length = l.meta.hypothesis_len;
    Discriminator model(*l.embeddings, cfg, l.meta.seed);
    restore_params(l.ckpt, model.params());
    if (meta) *meta = l.meta;
    return model;
}

ModelMeta read_model_meta(const fs::path& path) { return ModelMeta::from_json(load_checkpoint(path).metadata); }

} // namespace nligen
