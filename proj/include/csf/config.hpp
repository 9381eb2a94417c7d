#pragma once

#include <map>
#include <string>
#include <vector>

#include "csf/data.hpp"
#include "csf/model.hpp"

namespace csf {

// Parsed INI-style config: [section] headers, key = value lines, '#' or ';'
// comments. Values are kept as strings until typed extraction.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

RawConfig parse_ini(const std::string& text);
RawConfig parse_ini_file(const std::string& path);
// Applies "section.key=value" overrides (CLI flags win over file values).
void apply_overrides(RawConfig& cfg, const std::vector<std::string>& overrides);

struct DataSection {
    std::string kind = "synthetic";  // synthetic | ett-csv | ucr
    std::string path;
    std::string train_path, test_path;        // ucr
    std::vector<std::string> columns;         // ett-csv
    std::string synth_kind = "sine";
    int count = 64;
    double noise = 0.0;
    double ar_coeff = 0.9;
    int min_len = 512;
    int max_len = 2048;
    int horizon = 96;
    int classes = 3;
    int anchor_stride = 0;  // 0 = horizon
    bool crop = false;
    SplitSpec split;
};

struct TrainSection {
    uint64_t seed = 1;
    double step_size = 1e-4;
    int epochs = 10;
    int steps = 0;
    int batch = 8;
    bool freeze_backbone = false;
    double weight_decay = 0.01;
    int log_every = 0;  // 0 = epoch records only
};

struct RunConfig {
    ModelConfig model;
    DataSection data;
    TrainSection train;
    std::string out_dir = "runs/out";

    void validate() const;
    // Canonical shape-defining echo stored in checkpoints.
    std::string model_echo() const;
};

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);
RunConfig run_config_from_raw(const RawConfig& raw);

}  // namespace csf
