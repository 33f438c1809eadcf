#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nligen/models/classifier.hpp"
#include "nligen/models/discriminator.hpp"
#include "nligen/models/generator.hpp"
#include "nligen/numerics/tensor.hpp"

namespace nligen {

inline constexpr char kCheckpointMagic[] = "NLIGEN01";
inline constexpr std::size_t kMagicSize = 8;

enum class CheckpointErrorCode {
    NotACheckpoint, // magic does not start with "NLIGEN"
    Version,        // "NLIGEN" followed by another version
    VocabMismatch,
    Truncated,      // file ends inside a record; offset() tells where
    Malformed,      // structurally invalid content
    ModelMismatch,  // tensors or metadata do not fit the requested model
    Io,
};

class CheckpointError : public std::runtime_error {
public:
    CheckpointError(CheckpointErrorCode code, const std::string& what, std::optional<std::size_t> offset = {})
        : std::runtime_error(what), code_(code), offset_(offset) {}
    CheckpointErrorCode code() const { return code_; }
    std::optional<std::size_t> offset() const { return offset_; }

private:
    CheckpointErrorCode code_;
    std::optional<std::size_t> offset_;
};

enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> tensors; // file order
    nlohmann::json metadata = nlohmann::json::object();

    const Tensor* find(const std::string& name) const;
};

// Byte layout: magic, u32 tensor count, per tensor (u16 name length, name,
// u8 dtype, u8 rank, rank x u32 dims, values), u32 metadata length, JSON.
// All integers and values little-endian.
std::string encode_checkpoint(const Checkpoint& ckpt, Dtype dtype = Dtype::F64);
Checkpoint decode_checkpoint(const std::string& bytes);

// Writes to a sibling temp file and renames it over path.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path, Dtype dtype = Dtype::F64);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Metadata shared by every model checkpoint.
struct ModelMeta {
    std::string kind; // "classifier", "discriminator" or a generator kind
    std::size_t hidden = 0;
    std::size_t latent = 0;
    std::size_t embed_dim = 0;
    std::size_t vocab_size = 0;
    std::size_t premise_len = 0;
    std::size_t hypothesis_len = 0;
    std::size_t table_rows = 0;
    std::uint64_t vocab_hash = 0;
    std::uint64_t seed = 0;
    std::size_t epochs_trained = 0;

    nlohmann::json to_json() const;
    static ModelMeta from_json(const nlohmann::json& j);
};

// Throws CheckpointError(VocabMismatch) naming both hashes.
void verify_vocab_hash(const ModelMeta& meta, std::uint64_t expected);

Checkpoint model_checkpoint(const ParamStore& store, const ModelMeta& meta);
// Copies every tensor into store; names and shapes must match exactly.
void restore_params(const Checkpoint& ckpt, ParamStore& store);

struct ModelInfo {
    std::uint64_t vocab_hash = 0;
    std::uint64_t seed = 0;
    std::size_t epochs_trained = 0;
};

void save_classifier(const Classifier& model, const ModelInfo& info, const std::filesystem::path& path,
                     Dtype dtype = Dtype::F64);
void save_generator(const Generator& model, const ModelInfo& info, const std::filesystem::path& path,
                    Dtype dtype = Dtype::F64);
void save_discriminator(const Discriminator& model, const ModelInfo& info, const std::filesystem::path& path,
                        Dtype dtype = Dtype::F64);

// With expected_vocab_hash set, a different recorded hash is refused.
Classifier load_classifier(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash = {},
                           ModelMeta* meta = nullptr);
Generator load_generator(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash = {},
                         ModelMeta* meta = nullptr);
Discriminator load_discriminator(const std::filesystem::path& path,
                                 std::optional<std::uint64_t> expected_vocab_hash = {}, ModelMeta* meta = nullptr);

ModelMeta read_model_meta(const std::filesystem::path& path);

} // namespace nligen
