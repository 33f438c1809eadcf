#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>

#include "nligen/data/example.hpp"
#include "nligen/layers/dense.hpp"
#include "nligen/layers/hsoftmax.hpp"
#include "nligen/layers/lstm.hpp"
#include "nligen/layers/mlstm.hpp"
#include "nligen/numerics/param_store.hpp"

namespace nligen {

enum class GeneratorKind { AttEmbed, BaseEmbed, EncDec, VaeEncDec };

std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(std::string_view name);
// Embed kinds learn one latent row per training example instead of an encoder.
inline bool uses_latent_table(GeneratorKind k) { return k == GeneratorKind::AttEmbed || k == GeneratorKind::BaseEmbed; }
inline bool uses_encoder(GeneratorKind k) { return !uses_latent_table(k); }

struct GeneratorConfig {
    GeneratorKind kind = GeneratorKind::AttEmbed;
    std::size_t hidden = 150;
    std::size_t latent = 8;
    std::size_t table_rows = 0; // training-set size, embed kinds only
    SequenceLimits limits;

    // Decoder state size: hidden, or latent + 3 + hidden for base-embed.
    std::size_t decoder_size() const {
        return kind == GeneratorKind::BaseEmbed ? latent + kLabelCount + hidden : hidden;
    }
};

inline constexpr double kLatentInitStd = 0.05;

struct VaeLatent {
    Vec mu;
    Vec sigma;
    Vec epsilon;
    Vec z;
    double kl = 0.0;
};

// Hypothesis generator conditioned on (premise, label, Z). The decoder reads
// the hypothesis shifted right behind a <null> start token and predicts the
// next word through a hierarchical softmax; the final target is <null>.
//   att-embed  : C_0 of the match-LSTM = Dense_d([Z, L])
//   base-embed : plain LSTM of size d' = z + 3 + d, C_0 = Dense_d'([Z, L, h^p_M])
//   encdec     : Z = Dense_z(h^m_N) of an encoder over (premise, hypothesis)
//                whose match-LSTM starts from C_0 = Dense_d(L); att decoder
//   vae-encdec : Z = mu + sigma * eps with sigma = exp(logvar / 2); KL added
class Generator {
public:
    Generator(const Tensor& embeddings, const GeneratorConfig& cfg, std::uint64_t seed);

    const GeneratorConfig& config() const { return cfg_; }
    GeneratorKind kind() const { return cfg_.kind; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const Tensor& embeddings() const { return store_.value(emb_); }
    std::size_t vocab_size() const { return out_.vocab_size(); }
    const HierarchicalSoftmax& output_layer() const { return out_; }
    ParamId latent_table_id() const; // embed kinds only

    struct Loss {
        double nll = 0.0;        // summed over predicted tokens
        double kl = 0.0;         // vae-encdec only
        std::size_t tokens = 0;  // real hypothesis length + 1
        double total() const { return nll + kl; }
    };

    // Training objective for example `index` of the training set. vae-encdec
    // requires epsilon; other kinds ignore it. Throws std::out_of_range on an
    // invalid table index.
    Loss loss(const Example& ex, std::size_t index, const Vec* epsilon = nullptr) const;
    Loss loss_and_backward(const Example& ex, std::size_t index, const Vec* epsilon, double grad_scale = 1.0);

    // Teacher-forced NLL of the gold hypothesis under an explicit Z.
    Loss decode_loss(const Example& ex, const Vec& z) const;

    Vec table_row(std::size_t index) const;
    // encdec: Z; vae-encdec: Z_mu.
    Vec encode_latent(const Example& ex) const;
    VaeLatent vae_latent(const Example& ex, const Vec& epsilon) const;

    // Per-dimension std used to sample Z at generation time. Empty until set.
    std::optional<Vec> latent_sigma() const;
    void set_latent_sigma(const Vec& sigma);
    // embed kinds: std of the table rows; encdec: std of encoder outputs over
    // the given set; vae-encdec: ones (the prior).
    Vec estimate_latent_sigma(std::span<const Example> train, bool per_dimension = true) const;

    // Incremental decoding.
    struct State {
        std::shared_ptr<const MatchLstm::Premise> premise; // attention decoders
        LstmState hypothesis;                              // decoder LSTM state
        LstmState match;                                   // attention decoders
        Vec log_probs;                                     // next-token distribution
    };
    // State after consuming the <null> start token.
    State start(std::span<const TokenId> premise, Label label, const Vec& z) const;
    State advance(const State& state, TokenId token) const;
    const Vec& log_probs(const State& state) const { return state.log_probs; }

private:
    bool attention_decoder() const { return cfg_.kind != GeneratorKind::BaseEmbed; }
    void check_example(const Example& ex) const;
    void check_latent(const Vec& z) const;

    // Decoder NLL; when grads is non-null accumulates parameter gradients and
    // writes dL/dZ into dz.
    double decoder_run(const Example& ex, const Vec& z, ParamStore* grads, double grad_scale, Vec* dz,
                       std::size_t* tokens) const;

    struct EncoderCache;
    Vec encoder_hidden(const Example& ex, EncoderCache* cache) const;
    void encoder_backward(ParamStore& grads, const EncoderCache& cache, const Vec& dh) const;

    Loss run(const Example& ex, std::size_t index, const Vec* epsilon, ParamStore* grads, double grad_scale) const;

    GeneratorConfig cfg_;
    ParamStore store_;
    ParamId emb_ = 0;
    ParamId sigma_ = 0;
    std::optional<ParamId> table_;

    // decoder
    Lstm dec_premise_;
    Lstm dec_hypothesis_; // attention: hypothesis LSTM; base: the decoder LSTM
    MatchLstm dec_match_;
    Dense dec_c0_;
    HierarchicalSoftmax out_;

    // encoder
    Lstm enc_premise_, enc_hypothesis_;
    MatchLstm enc_match_;
    Dense enc_c0_, enc_z_, enc_logvar_;
};

} // namespace nligen
