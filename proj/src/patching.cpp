#include "csf/patching.hpp"

#include <string>

namespace csf {

void PatchConfig::validate() const {
    if (patch_len < 1) throw ConfigError("patch_len must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (repatch_len < 2) throw ConfigError("repatch_len must be >= 2");
    if (base_dim < 1) throw ConfigError("base_dim must be >= 1");
    if (max_len < patch_len) throw ConfigError("max_len must be >= patch_len");
}

int patch_count(int series_len, const PatchConfig& cfg) {
    if (series_len < cfg.patch_len)
        throw LengthError("series length " + std::to_string(series_len) + " < patch_len " +
                          std::to_string(cfg.patch_len));
    return (series_len - cfg.patch_len) / cfg.stride + 1;
}

Matrix patch_series(std::span<const double> x, const PatchConfig& cfg) {
    const int t = static_cast<int>(x.size());
    const int p0 = patch_count(t, cfg);
    Matrix patches(cfg.patch_len, p0);
    for (int p = 0; p < p0; ++p) {
        const int start = p * cfg.stride;
        for (int i = 0; i < cfg.patch_len; ++i) patches(i, p) = x[start + i];
    }
    return patches;
}

int activated_layers_for_patches(int64_t patches, int repatch_len) {
    if (patches < 1) throw LengthError("patch count must be >= 1");
    int layers = 0;
    while (patches > 1) {
        patches = (patches + repatch_len - 1) / repatch_len;
        ++layers;
    }
    return layers;
}

PyramidSchedule schedule(int series_len, const PatchConfig& cfg) {
    cfg.validate();
    if (series_len < cfg.patch_len || series_len > cfg.max_len)
        throw LengthError("series length " + std::to_string(series_len) + " outside [" +
                          std::to_string(cfg.patch_len) + ", " + std::to_string(cfg.max_len) + "]");
    PyramidSchedule s;
    s.input_len = series_len;
    s.initial_patches = patch_count(series_len, cfg);
    int p = s.initial_patches;
    int d = cfg.base_dim;
    while (p > 1) {
        const int next = (p + cfg.repatch_len - 1) / cfg.repatch_len;
        LayerShape layer;
        layer.patch_count = next;
        layer.channel_dim = d * cfg.repatch_len;
        layer.pad_patches = next * cfg.repatch_len - p;
        s.layers.push_back(layer);
        p = next;
        d = layer.channel_dim;
    }
    s.activated_layers = static_cast<int>(s.layers.size());
    return s;
}

Matrix repatch_matrix(const Matrix& h, int group_len) {
    if (group_len < 2) throw ShapeError("repatch_matrix: group length must be >= 2");
    if (h.cols() < 1) throw ShapeError("repatch_matrix: needs at least one patch");
    const int d = h.rows(), p_in = h.cols();
    const int p_out = (p_in + group_len - 1) / group_len;
    Matrix out(d * group_len, p_out);
    for (int j = 0; j < p_out; ++j)
        for (int k = 0; k < group_len; ++k) {
            const int src = j * group_len + k;
            if (src >= p_in) break;
            for (int i = 0; i < d; ++i) out(k * d + i, j) = h(i, src);
        }
    return out;
}

std::vector<uint8_t> repatch_mask(const std::vector<uint8_t>& mask, int group_len) {
    const int p_in = static_cast<int>(mask.size());
    const int p_out = (p_in + group_len - 1) / group_len;
    std::vector<uint8_t> out(p_out, 1);
    for (int j = 0; j < p_out; ++j)
        for (int k = 0; k < group_len; ++k) {
            const int src = j * group_len + k;
            if (src < p_in && !mask[src]) {
                out[j] = 0;
                break;
            }
        }
    return out;
}

LengthInterval length_interval(int layers, const PatchConfig& cfg) {
    if (layers < 1) throw LengthError("length_interval: layers must be >= 1");
    int64_t pow_lo = 1;  // l_rp^(L-1)
    for (int i = 0; i < layers - 1; ++i) pow_lo *= cfg.repatch_len;
    const int64_t lo = pow_lo * cfg.stride + cfg.patch_len;
    const int64_t hi = pow_lo * cfg.repatch_len * cfg.stride + cfg.patch_len - 1;
    LengthInterval iv;
    iv.lo = static_cast<int>(lo);
    iv.hi = static_cast<int>(std::min<int64_t>(hi, cfg.max_len));
    return iv;
}

SegmentMap segment_of(int layer, int patch, const PyramidSchedule& sched, const PatchConfig& cfg) {
    if (layer < 1 || layer > sched.activated_layers)
        throw IndexError("segment_of: layer " + std::to_string(layer) + " out of range");
    const LayerShape& shape = sched.layers[layer - 1];
    if (patch < 0 || patch >= shape.patch_count)
        throw IndexError("segment_of: patch " + std::to_string(patch) + " out of range");
    int64_t group = 1;
    for (int i = 0; i < layer; ++i) group *= cfg.repatch_len;
    SegmentMap m;
    m.layer = layer;
    m.patch = patch;
    m.start = group * patch;
    m.end = group * (patch + 1);
    const int64_t padded_len = group * shape.patch_count;
    if (m.end > padded_len) m.end = padded_len;  // never triggers: end == padded_len at most
    return m;
}

}  // namespace csf
