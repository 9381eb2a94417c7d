#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csf/rng.hpp"

namespace csf {

// Per-sample standardization over the context window. std falls back to 1
// when the window is constant (flagged so callers can decide what to do).
struct NormRecord {
    double mean = 0.0;
    double std = 1.0;
    bool constant = false;
};

NormRecord compute_norm(std::span<const double> values);
std::vector<double> normalize(std::span<const double> values, const NormRecord& n);
std::vector<double> denormalize(std::span<const double> values, const NormRecord& n);

// One univariate variable-length sample. For forecasting, target holds the
// horizon continuation (raw scale); for classification, label >= 0.
struct Sample {
    std::vector<double> values;  // raw context
    std::vector<double> target;  // raw forecast target (forecasting only)
    int label = -1;              // class label (classification only)
    NormRecord norm;
    std::string source;
};

struct NamedSeries {
    std::string name;
    std::vector<double> values;
};

struct DatasetManifest {
    std::string format;  // "ett-csv" | "ucr" | "synthetic"
    std::string path;
    std::vector<std::string> columns;  // expected feature columns; empty = all non-timestamp
    int class_count = 0;
};

// ETT-style CSV: header row, first column a timestamp (ignored), remaining
// columns numeric features. Each feature becomes an independent univariate
// series. Parse failures name the offending row and column.
std::vector<NamedSeries> load_ett_csv(const std::string& path, const DatasetManifest& manifest);

// UCR archive convention: one record per line, class label first, values
// tab/comma/space separated.
std::vector<Sample> load_ucr(const std::string& path);

// Chronological split by index fractions (train first, then val, then test).
struct SplitSpec {
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
    void validate() const;
};

struct IndexRange {
    int64_t begin = 0;
    int64_t end = 0;  // half-open
    int64_t size() const { return end - begin; }
};

struct SplitRanges {
    IndexRange train, val, test;
};
SplitRanges chronological_split(int64_t n, const SplitSpec& spec);

// Dynamic sliding window: anchors stride over [range.begin + min_len,
// range.end - horizon]; at each anchor the context length is drawn uniformly
// from [min_len, min(max_len, anchor - range.begin)]. Context is
// values[t-T : t], target values[t : t+horizon]. Both context and target lie
// fully inside the range (no cross-split leakage).
std::vector<Sample> sliding_window_varlen(const NamedSeries& series, const IndexRange& range,
                                          int min_len, int max_len, int horizon, int anchor_stride,
                                          Rng& rng);

// Sequential random subsampling: draws a target length uniformly from
// [min_len, len(values)], then keeps a uniformly random, order-preserving
// index subset of that size. crop = take a random contiguous window instead.
Sample subsample_ucr(const Sample& original, int min_len, Rng& rng, bool crop = false);

// Synthetic generators.
struct SynthConfig {
    std::string kind = "sine";  // sine | ar1 | classes
    int count = 64;
    int min_len = 512;
    int max_len = 2048;
    int horizon = 0;      // appended continuation for forecasting kinds
    double noise = 0.0;
    double ar_coeff = 0.9;
    int num_classes = 3;
};
std::vector<Sample> synth_generate(const SynthConfig& cfg, Rng& rng);

}  // namespace csf
