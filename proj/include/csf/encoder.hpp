#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csf/rng.hpp"
#include "csf/tape.hpp"

namespace csf {

// Pad mask: one flag per patch, true = padded (ignored as attention key).
using AttentionMask = std::vector<uint8_t>;

// One transformer encoder layer: multi-head self-attention plus a
// position-wise feed-forward block, pre-norm residual structure.
struct EncoderLayerParams {
    int model_dim = 0;
    int num_heads = 0;
    int head_dim = 0;

    std::vector<Param> wq, wk, wv;  // per head, head_dim x d
    Param wo;                       // d x (H * head_dim)
    Param ff_w1, ff_b1;             // d_ff x d, d_ff x 1
    Param ff_w2, ff_b2;             // d x d_ff, d x 1
    Param ln1_gain, ln1_bias;       // attention sublayer norm
    Param ln2_gain, ln2_bias;       // feed-forward sublayer norm

    EncoderLayerParams() = default;
    EncoderLayerParams(const std::string& prefix, int model_dim, int num_heads, int ff_dim,
                       Rng& rng);

    void collect(std::vector<Param*>& out);
};

// Bare multi-head self-attention (projections, masked softmax, head concat,
// output projection). No residual, no norm.
Var self_attention(Tape& t, Var h, EncoderLayerParams& params, const AttentionMask& mask);

// h + MHA(LN(h)), then + FFN(LN(.)). Shape-preserving.
Var encoder_layer(Tape& t, Var h, EncoderLayerParams& params, const AttentionMask& mask);

// Applies `depth` stacked encoder layers.
Var encoder_stack(Tape& t, Var h, std::vector<EncoderLayerParams>& layers,
                  const AttentionMask& mask);

}  // namespace csf
