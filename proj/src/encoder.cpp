#include "csf/encoder.hpp"

#include <cmath>

namespace csf {

namespace {

Matrix uniform_init(int rows, int cols, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (double& x : m.vec()) x = rng.uniform(-bound, bound);
    return m;
}

}  // namespace

EncoderLayerParams::EncoderLayerParams(const std::string& prefix, int d, int heads, int ff_dim,
                                       Rng& rng) {
    if (heads < 1 || d % heads != 0)
        throw ConfigError("encoder: model dim " + std::to_string(d) +
                          " not divisible by head count " + std::to_string(heads));
    model_dim = d;
    num_heads = heads;
    head_dim = d / heads;
    for (int h = 0; h < heads; ++h) {
        const std::string hs = std::to_string(h);
        wq.emplace_back(prefix + ".wq" + hs, uniform_init(head_dim, d, d, rng));
        wk.emplace_back(prefix + ".wk" + hs, uniform_init(head_dim, d, d, rng));
        wv.emplace_back(prefix + ".wv" + hs, uniform_init(head_dim, d, d, rng));
    }
    wo = Param(prefix + ".wo", uniform_init(d, d, d, rng));
    ff_w1 = Param(prefix + ".ff_w1", uniform_init(ff_dim, d, d, rng));
    ff_b1 = Param(prefix + ".ff_b1", Matrix(ff_dim, 1));
    ff_w2 = Param(prefix + ".ff_w2", uniform_init(d, ff_dim, ff_dim, rng));
    ff_b2 = Param(prefix + ".ff_b2", Matrix(d, 1));
    ln1_gain = Param(prefix + ".ln1_gain", Matrix::full(d, 1, 1.0));
    ln1_bias = Param(prefix + ".ln1_bias", Matrix(d, 1));
    ln2_gain = Param(prefix + ".ln2_gain", Matrix::full(d, 1, 1.0));
    ln2_bias = Param(prefix + ".ln2_bias", Matrix(d, 1));
}

void EncoderLayerParams::collect(std::vector<Param*>& out) {
    for (auto& p : wq) out.push_back(&p);
    for (auto& p : wk) out.push_back(&p);
    for (auto& p : wv) out.push_back(&p);
    out.push_back(&wo);
    out.push_back(&ff_w1);
    out.push_back(&ff_b1);
    out.push_back(&ff_w2);
    out.push_back(&ff_b2);
    out.push_back(&ln1_gain);
    out.push_back(&ln1_bias);
    out.push_back(&ln2_gain);
    out.push_back(&ln2_bias);
}

Var self_attention(Tape& t, Var h, EncoderLayerParams& params, const AttentionMask& mask) {
    const int patches = t.value(h).cols();
    if (t.value(h).rows() != params.model_dim) throw ShapeError("self_attention: channel mismatch");
    if (static_cast<int>(mask.size()) != patches)
        throw ShapeError("self_attention: mask length != patch count");
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
    std::vector<Var> head_outputs;
    head_outputs.reserve(params.num_heads);
    for (int hd = 0; hd < params.num_heads; ++hd) {
        Var q = t.matmul(t.use(params.wq[hd]), h);
        Var k = t.matmul(t.use(params.wk[hd]), h);
        Var v = t.matmul(t.use(params.wv[hd]), h);
        Var scores = t.matmul(t.transpose(k), q);  // patches x patches, one column per query
        Var weights = t.softmax_columns(scores, scale, &mask);
        head_outputs.push_back(t.matmul(v, weights));
    }
    return t.matmul(t.use(params.wo), t.concat_rows(head_outputs));
}

Var encoder_layer(Tape& t, Var h, EncoderLayerParams& params, const AttentionMask& mask) {
    Var normed1 = t.layer_norm(h, t.use(params.ln1_gain), t.use(params.ln1_bias));
    Var h1 = t.add(h, self_attention(t, normed1, params, mask));
    Var normed2 = t.layer_norm(h1, t.use(params.ln2_gain), t.use(params.ln2_bias));
    Var ff = t.add_col_broadcast(t.matmul(t.use(params.ff_w1), normed2), t.use(params.ff_b1));
    ff = t.gelu(ff);
    ff = t.add_col_broadcast(t.matmul(t.use(params.ff_w2), ff), t.use(params.ff_b2));
    return t.add(h1, ff);
}

Var encoder_stack(Tape& t, Var h, std::vector<EncoderLayerParams>& layers,
                  const AttentionMask& mask) {
    for (auto& layer : layers) h = encoder_layer(t, h, layer, mask);
    return h;
}

}  // namespace csf
