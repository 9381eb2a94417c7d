#include "csf/model.hpp"

#include <cmath>
#include <string>

namespace csf {

namespace {

Matrix uniform_init(int rows, int cols, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (double& x : m.vec()) x = rng.uniform(-bound, bound);
    return m;
}

}  // namespace

void ModelConfig::validate() const {
    patching.validate();
    if (num_heads < 1) throw ConfigError("num_heads must be >= 1");
    if (patching.base_dim % num_heads != 0)
        throw ConfigError("base_dim must be divisible by num_heads");
    if (ff_dim < 1) throw ConfigError("ff_dim must be >= 1");
    if (encoder_depth < 1) throw ConfigError("encoder_depth must be >= 1");
    if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
}

int ModelConfig::max_layers() const {
    return activated_layers_for_patches(max_initial_patches(), patching.repatch_len);
}

int ModelConfig::layer_dim(int layer) const {
    int d = patching.base_dim;
    for (int i = 0; i < layer; ++i) d *= patching.repatch_len;
    return d;
}

int ModelConfig::max_initial_patches() const {
    return (patching.max_len - patching.patch_len) / patching.stride + 1;
}

CrossScaleParams::CrossScaleParams(const std::string& prefix, int q_dim, int k_dim, int heads,
                                   Rng& rng) {
    if (heads < 1 || q_dim % heads != 0)
        throw ConfigError("cross-scale: dim " + std::to_string(q_dim) +
                          " not divisible by head count " + std::to_string(heads));
    query_dim = q_dim;
    kv_dim = k_dim;
    num_heads = heads;
    head_dim = q_dim / heads;
    for (int h = 0; h < heads; ++h) {
        const std::string hs = std::to_string(h);
        wq.emplace_back(prefix + ".wq" + hs, uniform_init(head_dim, q_dim, q_dim, rng));
        wk.emplace_back(prefix + ".wk" + hs, uniform_init(head_dim, k_dim, k_dim, rng));
        wv.emplace_back(prefix + ".wv" + hs, uniform_init(head_dim, k_dim, k_dim, rng));
    }
    wo = Param(prefix + ".wo", uniform_init(q_dim, q_dim, q_dim, rng));
    ln_gain = Param(prefix + ".ln_gain", Matrix::full(q_dim, 1, 1.0));
    ln_bias = Param(prefix + ".ln_bias", Matrix(q_dim, 1));
}

void CrossScaleParams::collect(std::vector<Param*>& out) {
    for (auto& p : wq) out.push_back(&p);
    for (auto& p : wk) out.push_back(&p);
    for (auto& p : wv) out.push_back(&p);
    out.push_back(&wo);
    out.push_back(&ln_gain);
    out.push_back(&ln_bias);
}

ReconParams::ReconParams(const std::string& prefix, int out_len, int feat_dim, Rng& rng) {
    w = Param(prefix + ".w", uniform_init(out_len, feat_dim, feat_dim, rng));
    b = Param(prefix + ".b", Matrix(out_len, 1));
}

void ReconParams::collect(std::vector<Param*>& out) {
    out.push_back(&w);
    out.push_back(&b);
}

void CtlParams::collect(std::vector<Param*>& out) {
    out.push_back(&repatch_proj);
    for (auto& e : encoder) e.collect(out);
    out.push_back(&out_ln_gain);
    out.push_back(&out_ln_bias);
    cross_scale.collect(out);
    recon.collect(out);
}

ModelParams::ModelParams(const ModelConfig& config, uint64_t seed) : cfg(config) {
    cfg.validate();
    Rng rng(Rng::derive(seed, "model-init"));
    const PatchConfig& pc = cfg.patching;
    const int d0 = pc.base_dim;
    const int p0_max = cfg.max_initial_patches();

    w_emb = Param("embed.w", uniform_init(d0, pc.patch_len, pc.patch_len, rng));
    Matrix pos(d0, p0_max);
    for (double& x : pos.vec()) x = rng.uniform(-0.02, 0.02);
    pos_embed = Param("embed.pos", std::move(pos));
    emb_ln_gain = Param("embed.ln_gain", Matrix::full(d0, 1, 1.0));
    emb_ln_bias = Param("embed.ln_bias", Matrix(d0, 1));
    for (int e = 0; e < cfg.encoder_depth; ++e)
        initial_encoder.emplace_back("embed.enc" + std::to_string(e), d0, cfg.num_heads, cfg.ff_dim,
                                     rng);

    const int l_max = cfg.max_layers();
    int64_t group = 1;
    for (int l = 1; l <= l_max; ++l) {
        group *= pc.repatch_len;
        const int d = cfg.layer_dim(l);
        const int d_prev = cfg.layer_dim(l - 1);
        const std::string prefix = "layer" + std::to_string(l);
        CtlParams ctl;
        ctl.repatch_proj = Param(prefix + ".repatch_proj", uniform_init(d, d, d, rng));
        for (int e = 0; e < cfg.encoder_depth; ++e)
            ctl.encoder.emplace_back(prefix + ".enc" + std::to_string(e), d, cfg.num_heads,
                                     cfg.ff_dim, rng);
        ctl.out_ln_gain = Param(prefix + ".out_ln_gain", Matrix::full(d, 1, 1.0));
        ctl.out_ln_bias = Param(prefix + ".out_ln_bias", Matrix(d, 1));
        ctl.cross_scale = CrossScaleParams(prefix + ".csa", d, d_prev, cfg.num_heads, rng);
        ctl.recon = ReconParams(prefix + ".recon", static_cast<int>(group) * pc.patch_len, d, rng);
        layers.push_back(std::move(ctl));
    }
}

std::vector<Param*> ModelParams::all_params() {
    std::vector<Param*> out;
    out.push_back(&w_emb);
    out.push_back(&pos_embed);
    out.push_back(&emb_ln_gain);
    out.push_back(&emb_ln_bias);
    for (auto& e : initial_encoder) e.collect(out);
    for (auto& l : layers) l.collect(out);
    return out;
}

void ModelParams::set_trainable(bool trainable) {
    for (Param* p : all_params()) p->trainable = trainable;
}

FeatureMap embed_initial(Tape& t, const Matrix& patches, ModelParams& params) {
    if (patches.rows() != params.cfg.patching.patch_len)
        throw ShapeError("embed_initial: patch length mismatch");
    const int p0 = patches.cols();
    if (p0 > params.cfg.max_initial_patches())
        throw LengthError("embed_initial: more patches than max_len allows");
    Var embedded = t.matmul(t.use(params.w_emb), t.constant(patches));
    Var pos = t.use(params.pos_embed);
    if (t.value(pos).cols() != p0) pos = t.slice_cols(pos, 0, p0);
    Var with_pos = t.add(embedded, pos);
    Var normed = t.layer_norm(with_pos, t.use(params.emb_ln_gain), t.use(params.emb_ln_bias));
    FeatureMap out;
    out.layer = 0;
    out.pad_mask.assign(p0, 0);
    out.values = encoder_stack(t, normed, params.initial_encoder, out.pad_mask);
    return out;
}

FeatureMap ctl_forward(Tape& t, const FeatureMap& h_prev, ModelParams& params, int layer) {
    if (layer < 1 || layer > static_cast<int>(params.layers.size()))
        throw IndexError("ctl_forward: layer out of range");
    CtlParams& ctl = params.layers[layer - 1];
    const int l_rp = params.cfg.patching.repatch_len;
    Var grouped = t.repatch(h_prev.values, l_rp);
    Var projected = t.matmul(t.use(ctl.repatch_proj), grouped);
    Var normed = t.instance_norm(projected);
    FeatureMap out;
    out.layer = layer;
    out.pad_mask = repatch_mask(h_prev.pad_mask, l_rp);
    Var encoded = encoder_stack(t, normed, ctl.encoder, out.pad_mask);
    out.values = t.layer_norm(encoded, t.use(ctl.out_ln_gain), t.use(ctl.out_ln_bias));
    return out;
}

FeatureMap cross_scale_fuse(Tape& t, const FeatureMap& h_star, const FeatureMap& h_prev,
                            CrossScaleParams& params) {
    if (h_star.layer != h_prev.layer + 1)
        throw ShapeError("cross_scale_fuse: layers must be adjacent");
    if (t.value(h_star.values).rows() != params.query_dim ||
        t.value(h_prev.values).rows() != params.kv_dim)
        throw ShapeError("cross_scale_fuse: channel mismatch");
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
    std::vector<Var> head_outputs;
    head_outputs.reserve(params.num_heads);
    for (int h = 0; h < params.num_heads; ++h) {
        Var q = t.matmul(t.use(params.wq[h]), h_star.values);
        Var k = t.matmul(t.use(params.wk[h]), h_prev.values);
        Var v = t.matmul(t.use(params.wv[h]), h_prev.values);
        Var scores = t.matmul(t.transpose(k), q);  // P^{l-1} x P^l
        Var weights = t.softmax_columns(scores, scale, &h_prev.pad_mask);
        head_outputs.push_back(t.matmul(v, weights));
    }
    Var fused = t.matmul(t.use(params.wo), t.concat_rows(head_outputs));
    Var residual = t.add(h_star.values, fused);
    FeatureMap out;
    out.layer = h_star.layer;
    out.pad_mask = h_star.pad_mask;
    out.values = t.layer_norm(residual, t.use(params.ln_gain), t.use(params.ln_bias));
    return out;
}

PyramidResult forward_pyramid(Tape& t, std::span<const double> series, ModelParams& params) {
    const PatchConfig& pc = params.cfg.patching;
    PyramidResult result;
    result.sched = schedule(static_cast<int>(series.size()), pc);
    result.patches = patch_series(series, pc);
    if (result.sched.activated_layers == 0) return result;
    FeatureMap prev = embed_initial(t, result.patches, params);
    for (int l = 1; l <= result.sched.activated_layers; ++l) {
        FeatureMap star = ctl_forward(t, prev, params, l);
        FeatureMap fused = cross_scale_fuse(t, star, prev, params.layers[l - 1].cross_scale);
        result.maps.push_back(fused);
        prev = fused;
    }
    return result;
}

ReconTargets recon_targets(const Matrix& patches, int layer, const PyramidSchedule& sched,
                           const PatchConfig& cfg) {
    if (layer < 1 || layer > sched.activated_layers) throw IndexError("recon_targets: bad layer");
    const LayerShape& shape = sched.layers[layer - 1];
    int64_t group = 1;
    for (int i = 0; i < layer; ++i) group *= cfg.repatch_len;
    const int l_p = cfg.patch_len;
    const int p0 = patches.cols();
    ReconTargets out;
    out.targets = Matrix(static_cast<int>(group) * l_p, shape.patch_count);
    out.valid_rows.resize(shape.patch_count);
    for (int p = 0; p < shape.patch_count; ++p) {
        const SegmentMap seg = segment_of(layer, p, sched, cfg);
        int64_t real = 0;
        for (int64_t idx = seg.start; idx < seg.end; ++idx) {
            const int64_t k = idx - seg.start;
            if (idx < p0) {
                for (int i = 0; i < l_p; ++i)
                    out.targets(static_cast<int>(k) * l_p + i, p) = patches(i, static_cast<int>(idx));
                ++real;
            }
            // padded patch columns stay zero
        }
        out.valid_rows[p] = static_cast<int>(real) * l_p;
    }
    return out;
}

ReconOutput reconstruct_layer(Tape& t, const FeatureMap& h, ReconParams& recon,
                              const Matrix& patches, const PyramidSchedule& sched,
                              const PatchConfig& cfg) {
    ReconOutput out;
    out.targets = recon_targets(patches, h.layer, sched, cfg);
    out.predictions = t.add_col_broadcast(t.matmul(t.use(recon.w), h.values), t.use(recon.b));
    if (!t.value(out.predictions).same_shape(out.targets.targets))
        throw ShapeError("reconstruct_layer: prediction/target shape mismatch");
    return out;
}

PretrainLoss pretrain_loss(Tape& t, const std::vector<FeatureMap>& maps, ModelParams& params,
                           const Matrix& patches, const PyramidSchedule& sched, double alpha) {
    if (alpha < 0.0) throw ConfigError("pretrain_loss: alpha must be >= 0");
    if (maps.empty()) throw ShapeError("pretrain_loss: no feature maps");
    std::vector<Var> recon_terms, indep_terms;
    for (const FeatureMap& map : maps) {
        ReconOutput rec =
            reconstruct_layer(t, map, params.layers[map.layer - 1].recon, patches, sched,
                              params.cfg.patching);
        recon_terms.push_back(
            t.sq_error_columns(rec.predictions, rec.targets.targets, rec.targets.valid_rows));
        indep_terms.push_back(t.sum_squares(map.values));
    }
    PretrainLoss loss;
    Var recon_sum = t.add_many(recon_terms);
    Var indep_sum = t.add_many(indep_terms);
    loss.recon_value = t.value(recon_sum)(0, 0);
    loss.indep_value = t.value(indep_sum)(0, 0);
    loss.total = alpha > 0.0 ? t.add(recon_sum, t.scale(indep_sum, alpha)) : recon_sum;
    return loss;
}

}  // namespace csf
