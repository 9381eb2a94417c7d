#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "csf/analysis.hpp"
#include "csf/data.hpp"
#include "csf/heads.hpp"
#include "csf/model.hpp"
#include "csf/optim.hpp"

namespace csf {

// Shared loss evaluation used by training loops and head-routing tests.

// Builds the pretraining graph for one normalized sample and returns the loss
// vars; callers drive backward/flush.
struct SampleLoss {
    double total = 0.0;
    double recon = 0.0;
    double indep = 0.0;
};
SampleLoss pretrain_sample(Tape& t, const Sample& sample, ModelParams& params, Var* total_out);

// Task loss for one sample (L1 on normalized targets for forecasting,
// cross-entropy for classification). Requires schedule(T).activated_layers >= 1.
double task_sample(Tape& t, const Sample& sample, ModelParams& params, TaskHeads& heads,
                   Var* loss_out);

struct PretrainOptions {
    int steps = 500;       // optimizer updates; 0 = epochs * ceil(n / batch)
    int epochs = 0;        // used when steps == 0
    int batch = 8;
    double step_size = 1e-4;
    double weight_decay = 0.01;
    uint64_t seed = 1;
};

struct StepRecord {
    int step = 0;
    double l_total = 0.0;
    double l_recon = 0.0;
    double l_indep = 0.0;
};

struct PretrainResult {
    std::vector<StepRecord> steps;        // per optimizer update (batch averages)
    std::vector<StepRecord> epochs;       // per full pass (sample averages), step = epoch index
};

using StepSink = std::function<void(const StepRecord&)>;

PretrainResult pretrain(ModelParams& params, const std::vector<Sample>& train,
                        const PretrainOptions& opt, const StepSink& on_step = nullptr,
                        const StepSink& on_epoch = nullptr);

struct FinetuneOptions {
    int epochs = 10;
    int batch = 8;
    double step_size = 1e-4;
    double weight_decay = 0.01;
    uint64_t seed = 1;
    bool freeze_backbone = false;
};

struct EpochMetrics {
    int epoch = 0;
    std::string split;
    double loss = 0.0;   // task loss on normalized scale
    double mse = 0.0;    // forecast, de-normalized
    double mae = 0.0;
    double accuracy = 0.0;  // classification
    double macro_f1 = 0.0;
    double wall_time_s = 0.0;
};

struct FinetuneResult {
    std::vector<EpochMetrics> trace;
    int best_epoch = -1;
    double best_val = 0.0;  // val MSE (forecast) or val error rate (classify)
};

using EpochSink = std::function<void(const EpochMetrics&)>;
// on_best fires whenever validation improves (after the epoch's records).
using BestSink = std::function<void(int epoch)>;

FinetuneResult finetune(ModelParams& params, TaskHeads& heads, const std::vector<Sample>& train,
                        const std::vector<Sample>& val, const FinetuneOptions& opt,
                        const EpochSink& on_epoch = nullptr, const BestSink& on_best = nullptr);

// Evaluation over a sample set (no gradients).
EpochMetrics evaluate(ModelParams& params, TaskHeads& heads, const std::vector<Sample>& samples,
                      const std::string& split_name);

// Deepest-layer feature vectors stacked over samples, grouped by activated
// layer count; the largest group becomes the representation matrix.
struct RepresentationExtract {
    Matrix rep;     // n x d^L
    int layer = 0;
    int total_samples = 0;  // before group selection
};
RepresentationExtract extract_representation(ModelParams& params,
                                             const std::vector<Sample>& samples);

}  // namespace csf
