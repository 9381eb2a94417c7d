#pragma once

#include <span>
#include <string>
#include <vector>

#include "csf/encoder.hpp"
#include "csf/patching.hpp"
#include "csf/tape.hpp"

namespace csf {

// Full model configuration. The patching geometry plus encoder hyperparameters
// and the feature-independence weight used by pretraining.
struct ModelConfig {
    PatchConfig patching;
    int num_heads = 8;
    int ff_dim = 2048;
    int encoder_depth = 1;
    double alpha = 1e-4;  // feature-independence weight

    void validate() const;
    int max_layers() const;               // L_max for max_len
    int layer_dim(int layer) const;       // d^l = l_rp^l * d0
    int max_initial_patches() const;      // P^0 at max_len
};

// One feature scale: values are d^l x P^l on the tape, plus the pad mask.
struct FeatureMap {
    int layer = 0;
    Var values;
    AttentionMask pad_mask;
};

// Cross-scale attention: queries from layer l, keys/values from layer l-1,
// heads concatenated, projected, residual-added and layer-normed.
struct CrossScaleParams {
    int query_dim = 0;  // d^l
    int kv_dim = 0;     // d^{l-1}
    int num_heads = 0;
    int head_dim = 0;   // d_csa = d^l / H

    std::vector<Param> wq;  // per head, d_csa x d^l
    std::vector<Param> wk;  // per head, d_csa x d^{l-1}
    std::vector<Param> wv;  // per head, d_csa x d^{l-1}
    Param wo;               // d^l x (H * d_csa)
    Param ln_gain, ln_bias;

    CrossScaleParams() = default;
    CrossScaleParams(const std::string& prefix, int query_dim, int kv_dim, int heads, Rng& rng);
    void collect(std::vector<Param*>& out);
};

// Per-layer reconstruction decoder mapping one layer-l patch feature back to
// its (l_rp)^l * l_p flattened segment of the padded patch sequence.
struct ReconParams {
    Param w;  // (l_rp^l * l_p) x d^l
    Param b;  // (l_rp^l * l_p) x 1

    ReconParams() = default;
    ReconParams(const std::string& prefix, int out_len, int feat_dim, Rng& rng);
    void collect(std::vector<Param*>& out);
};

struct CtlParams {
    Param repatch_proj;  // d^l x d^l, applied after concatenation
    std::vector<EncoderLayerParams> encoder;
    Param out_ln_gain, out_ln_bias;
    CrossScaleParams cross_scale;
    ReconParams recon;

    void collect(std::vector<Param*>& out);
};

// All backbone parameters. Construction allocates every layer up to L_max;
// shallower inputs simply leave the deeper layers untouched.
struct ModelParams {
    ModelConfig cfg;
    Param w_emb;       // d0 x l_p
    Param pos_embed;   // d0 x P0_max
    Param emb_ln_gain, emb_ln_bias;
    std::vector<EncoderLayerParams> initial_encoder;
    std::vector<CtlParams> layers;  // index l-1 -> layer l

    ModelParams() = default;
    ModelParams(const ModelConfig& cfg, uint64_t seed);

    // Stable enumeration order: defines checkpoint layout and optimizer state.
    std::vector<Param*> all_params();
    void set_trainable(bool trainable);
};

// Eq-1 pipeline: linear embed -> positional embedding -> layer norm ->
// encoder stack. Output layer-0 features d0 x P0.
FeatureMap embed_initial(Tape& t, const Matrix& patches, ModelParams& params);

// One Conv-like Transformer Layer: repatch -> projection -> instance norm ->
// encoder stack -> layer norm. Produces H*_l (pre-fusion).
FeatureMap ctl_forward(Tape& t, const FeatureMap& h_prev, ModelParams& params, int layer);

// Cross-scale fusion producing H_l from H*_l and H_{l-1}.
FeatureMap cross_scale_fuse(Tape& t, const FeatureMap& h_star, const FeatureMap& h_prev,
                            CrossScaleParams& params);

struct PyramidResult {
    PyramidSchedule sched;
    Matrix patches;                // l_p x P^0, raw (unpadded) patch matrix
    std::vector<FeatureMap> maps;  // H_1 .. H_L (fused)
};

// Runs the full hierarchy on a series. Throws LengthError outside
// [l_p, max_len]; returns an empty map list when no layer activates.
PyramidResult forward_pyramid(Tape& t, std::span<const double> series, ModelParams& params);

// Per-patch reconstruction targets for layer l: column p is the flattened
// slice of the zero-padded patch matrix covered by segment_of(l, p).
// valid_rows[p] counts the prefix entries that come from real (unpadded)
// patches; the rest belong to padding and are excluded from the loss.
struct ReconTargets {
    Matrix targets;               // (l_rp^l * l_p) x P^l
    std::vector<int> valid_rows;
};
ReconTargets recon_targets(const Matrix& patches, int layer, const PyramidSchedule& sched,
                           const PatchConfig& cfg);

// Predictions W^recon_l H_l + b and the matching targets for one layer.
struct ReconOutput {
    Var predictions;
    ReconTargets targets;
};
ReconOutput reconstruct_layer(Tape& t, const FeatureMap& h, ReconParams& recon,
                              const Matrix& patches, const PyramidSchedule& sched,
                              const PatchConfig& cfg);

// L_total = sum_l sum_p ||x - xhat||^2 + alpha * sum_l sum_p ||h_l^p||^2.
// Padded target entries are excluded from the reconstruction term. When
// alpha == 0 the independence term is still evaluated for logging but is not
// part of the optimized total.
struct PretrainLoss {
    Var total;
    double recon_value = 0.0;
    double indep_value = 0.0;
};
PretrainLoss pretrain_loss(Tape& t, const std::vector<FeatureMap>& maps, ModelParams& params,
                           const Matrix& patches, const PyramidSchedule& sched, double alpha);

}  // namespace csf
