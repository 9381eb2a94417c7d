#pragma once

#include <string>
#include <vector>

#include "csf/analysis.hpp"
#include "csf/config.hpp"
#include "csf/trainer.hpp"

namespace csf {

// Materialized splits for one run.
struct BuiltData {
    std::vector<Sample> train, val, test;
};

// Builds datasets from the config: synthetic generators, ETT-style CSV with
// channel-independent chronological splits, or UCR train/test files with
// sequential random subsampling. Deterministic given config + seed.
BuiltData build_datasets(const RunConfig& cfg);

struct RunSummary {
    std::string checkpoint_path;
    std::string checkpoint_hash;
    double wall_clock_s = 0.0;
};

// pretrain: trains the backbone with the self-reconstruction objective,
// writes checkpoint.bin, pretrain_log.jsonl and summary.json under out_dir.
RunSummary cmd_pretrain(const RunConfig& cfg);

// finetune: attaches task heads, optionally warm-starting the backbone from
// checkpoint_path (empty = fresh backbone, logged warning). Writes
// checkpoint_final.bin, checkpoint_best.bin, finetune_log.jsonl, summary.json.
RunSummary cmd_finetune(const RunConfig& cfg, const std::string& checkpoint_path);

// analyze: extracts deepest-layer features over the evaluation split and
// writes redundancy_report.txt.
RedundancyReport cmd_analyze(const RunConfig& cfg, const std::string& checkpoint_path);

// schedule: human-readable pyramid description for one length.
std::string describe_schedule(int length, const ModelConfig& cfg);

}  // namespace csf
