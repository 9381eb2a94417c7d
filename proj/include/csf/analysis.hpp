#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csf/matrix.hpp"

namespace csf {

// Point metrics.
struct ErrorMetrics {
    double mse = 0.0;
    double mae = 0.0;
};
ErrorMetrics error_metrics(std::span<const double> pred, std::span<const double> truth);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};
// Classes absent from both predictions and truth are excluded from the macro
// average; a class present on either side with no true positives scores 0.
ClassificationMetrics classification_metrics(std::span<const int> pred, std::span<const int> truth,
                                             int num_classes);

// Pair selection shared by the redundancy metrics: all unordered column pairs
// when d <= all_pairs_threshold, otherwise sample_count seeded random pairs.
struct PairSampling {
    int all_pairs_threshold = 256;
    int sample_count = 10000;
    uint64_t seed = 0;
};

// Redundancy suite over an n x d representation matrix (rows = samples).
struct RedundancyReport {
    double pearson_abs = 0.0;
    double spearman_abs = 0.0;
    double mutual_info = 0.0;    // sum over all pairs (scaled from the sample), nats
    double pca_proportion = 0.0; // k/d for 80% explained variance
    // estimator settings echo
    int n = 0;
    int d = 0;
    int d_used = 0;          // after dropping constant columns
    int mi_bins = 0;
    int64_t pairs_total = 0;
    int64_t pairs_sampled = 0;
    bool sampled = false;
    uint64_t seed = 0;
    int dropped_columns = 0;

    std::string to_text() const;
};

double pearson_abs(const Matrix& rep, const PairSampling& pairs = {});
double spearman_abs(const Matrix& rep, const PairSampling& pairs = {});
double mutual_information(const Matrix& rep, int bins = 16, const PairSampling& pairs = {});
double pca_proportion(const Matrix& rep, double variance_target = 0.80);

RedundancyReport redundancy_report(const Matrix& rep, int mi_bins = 16,
                                   const PairSampling& pairs = {});

// Average ranks for ties (1-based), the Spearman rank transform.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace csf
