#include "csf/heads.hpp"

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

TaskHeads::TaskHeads(TaskKind k, int out_dim, const ModelConfig& cfg, uint64_t seed) {
    if (out_dim < 1) throw ConfigError("head output dim must be >= 1");
    if (k == TaskKind::classify && out_dim < 2)
        throw ConfigError("classification needs at least 2 classes");
    kind = k;
    output_dim = out_dim;
    Rng rng(Rng::derive(seed, "heads-init"));
    const std::string tag = (k == TaskKind::forecast) ? "f" : "c";
    const int l_max = cfg.max_layers();
    for (int l = 1; l <= l_max; ++l) {
        const int d = cfg.layer_dim(l);
        HeadParams h;
        h.layer = l;
        h.w = Param("head." + tag + std::to_string(out_dim) + ".l" + std::to_string(l) + ".w",
                    uniform_init(out_dim, d, d, rng));
        h.b = Param("head." + tag + std::to_string(out_dim) + ".l" + std::to_string(l) + ".b",
                    Matrix(out_dim, 1));
        per_layer.push_back(std::move(h));
    }
}

std::vector<Param*> TaskHeads::all_params() {
    std::vector<Param*> out;
    for (auto& h : per_layer) {
        out.push_back(&h.w);
        out.push_back(&h.b);
    }
    return out;
}

TaskHeads::HeadParams& select_head(const PyramidSchedule& sched, TaskHeads& heads) {
    const int l = sched.activated_layers;
    if (l < 1)
        throw LengthError("no activated layers for input length " +
                          std::to_string(sched.input_len) + "; series too short for task heads");
    if (l > static_cast<int>(heads.per_layer.size()))
        throw ShapeError("select_head: schedule activates more layers than heads exist");
    return heads.per_layer[l - 1];
}

Var head_affine(Tape& t, const FeatureMap& features, TaskHeads::HeadParams& head) {
    if (features.layer != head.layer)
        throw ShapeError("head layer " + std::to_string(head.layer) +
                         " does not match feature layer " + std::to_string(features.layer));
    if (t.value(features.values).cols() != 1)
        throw ShapeError("head input must be the single deepest patch (P == 1)");
    return t.add_col_broadcast(t.matmul(t.use(head.w), features.values), t.use(head.b));
}

std::vector<double> forecast(Tape& t, const FeatureMap& features, TaskHeads::HeadParams& head,
                             const NormRecord& norm) {
    const Matrix& pred = t.value(head_affine(t, features, head));
    return denormalize(std::span<const double>(pred.vec()), norm);
}

std::vector<double> classify(Tape& t, const FeatureMap& features, TaskHeads::HeadParams& head) {
    Var logits = head_affine(t, features, head);
    const Matrix& probs = t.value(t.softmax_columns(logits, 1.0));
    return probs.vec();
}

}  // namespace csf
