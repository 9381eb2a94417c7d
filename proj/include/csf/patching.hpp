#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csf/matrix.hpp"

namespace csf {

// Patching geometry. With patch length l_p and stride s_p a series of length T
// yields P0 = floor((T - l_p) / s_p) + 1 patches; each re-patching step groups
// repatch_len consecutive patches (zero-padded at the end when needed), so
// patch counts shrink by ceil-division while channel dims grow by the same
// factor until a single patch remains.
struct PatchConfig {
    int patch_len = 16;    // l_p
    int stride = 16;       // s_p
    int repatch_len = 2;   // l_rp, >= 2
    int base_dim = 16;     // d0
    int max_len = 2048;    // longest accepted series

    void validate() const;
};

struct LayerShape {
    int patch_count = 0;  // P^l
    int channel_dim = 0;  // d^l
    int pad_patches = 0;  // zero patches appended before grouping at this layer
};

struct PyramidSchedule {
    int input_len = 0;         // T
    int initial_patches = 0;   // P^0
    int activated_layers = 0;  // L
    std::vector<LayerShape> layers;  // index l-1 -> shape of layer l, size == activated_layers
};

struct SegmentMap {
    int layer = 0;
    int patch = 0;  // 0-based
    // Half-open range of original (padded) patch indices reconstructed by this
    // layer-l patch.
    int64_t start = 0;
    int64_t end = 0;
};

// Number of patches for a series of length n (requires n >= patch_len).
int patch_count(int series_len, const PatchConfig& cfg);

// Column p holds x[p*s_p : p*s_p + l_p].
Matrix patch_series(std::span<const double> x, const PatchConfig& cfg);

// Layer shapes and activated-layer count for a series of length T.
// Throws LengthError unless patch_len <= T <= max_len.
PyramidSchedule schedule(int series_len, const PatchConfig& cfg);

// Activated layers for a raw patch count (ceil-log base repatch_len).
int activated_layers_for_patches(int64_t patches, int repatch_len);

// Non-differentiable re-patching used by oracles and target construction:
// pads columns with zeros to a multiple of group_len, then stacks each group
// of group_len consecutive columns into one column.
Matrix repatch_matrix(const Matrix& h, int group_len);

// Pad-mask propagation across one re-patching: a group counts as real (false)
// when any of its members is real.
std::vector<uint8_t> repatch_mask(const std::vector<uint8_t>& mask, int group_len);

// Closed interval [lo, hi] of series lengths that activate exactly L layers,
// hi clipped to cfg.max_len. May be empty (lo > hi) when L is unreachable
// below max_len.
struct LengthInterval {
    int lo = 0;
    int hi = 0;
    bool empty() const { return lo > hi; }
};
LengthInterval length_interval(int layers, const PatchConfig& cfg);

// Original (padded) patch-index range reconstructed by patch p of layer l.
// l in [1, L], p in [0, P^l).
SegmentMap segment_of(int layer, int patch, const PyramidSchedule& sched, const PatchConfig& cfg);

}  // namespace csf
