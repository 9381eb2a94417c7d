#pragma once

#include <string>
#include <vector>

#include "csf/data.hpp"
#include "csf/model.hpp"

namespace csf {

enum class TaskKind { forecast, classify };

// One affine head per layer. For forecasting the output length is the
// horizon; for classification it is the class count. Fine-tuning touches only
// the head at the deepest activated layer of each sample.
struct TaskHeads {
    TaskKind kind = TaskKind::forecast;
    int output_dim = 0;  // horizon or class count
    struct HeadParams {
        int layer = 0;
        Param w;  // output_dim x d^l
        Param b;  // output_dim x 1
    };
    std::vector<HeadParams> per_layer;  // index l-1 -> head for layer l

    TaskHeads() = default;
    TaskHeads(TaskKind kind, int output_dim, const ModelConfig& cfg, uint64_t seed);

    std::vector<Param*> all_params();
};

// Deepest-activated-layer selection. Throws LengthError when no layer
// activates (schedule.activated_layers == 0).
TaskHeads::HeadParams& select_head(const PyramidSchedule& sched, TaskHeads& heads);

// Affine map of the final single-patch feature; output on the normalized
// scale, (output_dim x 1).
Var head_affine(Tape& t, const FeatureMap& features, TaskHeads::HeadParams& head);

// Forecast on the raw scale: de-normalizes the head output with the sample's
// stored scaling.
std::vector<double> forecast(Tape& t, const FeatureMap& features, TaskHeads::HeadParams& head,
                             const NormRecord& norm);

// Class probabilities (softmax of the head logits); sums to 1.
std::vector<double> classify(Tape& t, const FeatureMap& features, TaskHeads::HeadParams& head);

}  // namespace csf
