#include "csf/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "csf/rng.hpp"

namespace csf {

ErrorMetrics error_metrics(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw ShapeError("error_metrics: length mismatch or empty");
    ErrorMetrics m;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        m.mse += d * d;
        m.mae += std::abs(d);
    }
    m.mse /= static_cast<double>(pred.size());
    m.mae /= static_cast<double>(pred.size());
    return m;
}

ClassificationMetrics classification_metrics(std::span<const int> pred, std::span<const int> truth,
                                             int num_classes) {
    if (pred.size() != truth.size() || pred.empty())
        throw ShapeError("classification_metrics: length mismatch or empty");
    std::vector<int64_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    int64_t correct = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || pred[i] >= num_classes || truth[i] < 0 || truth[i] >= num_classes)
            throw IndexError("classification_metrics: label out of range at index " +
                             std::to_string(i));
        if (pred[i] == truth[i]) {
            ++correct;
            ++tp[truth[i]];
        } else {
            ++fp[pred[i]];
            ++fn[truth[i]];
        }
    }
    ClassificationMetrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
    double f1_sum = 0.0;
    int f1_count = 0;
    for (int c = 0; c < num_classes; ++c) {
        if (tp[c] + fp[c] + fn[c] == 0) continue;  // absent from both sides
        const double denom = 2.0 * tp[c] + fp[c] + fn[c];
        f1_sum += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
        ++f1_count;
    }
    m.macro_f1 = f1_count > 0 ? f1_sum / f1_count : 0.0;
    return m;
}

namespace {

struct Columns {
    std::vector<std::vector<double>> cols;  // centered
    std::vector<double> norms;              // sqrt(sum of squares of centered)
    int dropped = 0;
};

Columns extract_columns(const Matrix& rep) {
    const int n = rep.rows(), d = rep.cols();
    if (n < 2) throw ShapeError("redundancy metrics need n >= 2 samples");
    Columns out;
    for (int j = 0; j < d; ++j) {
        std::vector<double> col(n);
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += rep(i, j);
        mean /= n;
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
            col[i] = rep(i, j) - mean;
            ss += col[i] * col[i];
        }
        if (ss <= 0.0) {
            ++out.dropped;
            continue;
        }
        out.cols.push_back(std::move(col));
        out.norms.push_back(std::sqrt(ss));
    }
    if (out.dropped > 0)
        std::cerr << "warning: dropped " << out.dropped << " constant feature column(s)\n";
    if (out.cols.size() < 2) throw ShapeError("fewer than 2 non-constant feature columns");
    return out;
}

std::vector<std::pair<int, int>> select_pairs(int d, const PairSampling& spec, int64_t& total,
                                              bool& sampled) {
    total = static_cast<int64_t>(d) * (d - 1) / 2;
    std::vector<std::pair<int, int>> pairs;
    if (d <= spec.all_pairs_threshold || total <= spec.sample_count) {
        sampled = false;
        pairs.reserve(static_cast<size_t>(total));
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
        return pairs;
    }
    sampled = true;
    Rng rng(Rng::derive(spec.seed, "pair-sampling"));
    std::set<int64_t> chosen;
    while (static_cast<int>(chosen.size()) < spec.sample_count)
        chosen.insert(rng.uniform_int(0, total - 1));
    // Decode triangular linear index: pairs ordered (0,1),(0,2),..,(1,2),..
    for (const int64_t linear : chosen) {
        int64_t k = linear;
        int i = 0;
        int64_t row_len = d - 1;
        while (k >= row_len) {
            k -= row_len;
            ++i;
            --row_len;
        }
        pairs.emplace_back(i, i + 1 + static_cast<int>(k));
    }
    return pairs;
}

double abs_corr_mean(const Columns& c, const PairSampling& spec) {
    int64_t total = 0;
    bool sampled = false;
    const auto pairs = select_pairs(static_cast<int>(c.cols.size()), spec, total, sampled);
    double sum = 0.0;
    for (const auto& [i, j] : pairs) {
        double dot = 0.0;
        const auto& a = c.cols[i];
        const auto& b = c.cols[j];
        for (size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
        sum += std::abs(dot / (c.norms[i] * c.norms[j]));
    }
    return sum / static_cast<double>(pairs.size());
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson_abs(const Matrix& rep, const PairSampling& pairs) {
    return abs_corr_mean(extract_columns(rep), pairs);
}

double spearman_abs(const Matrix& rep, const PairSampling& pairs) {
    const int n = rep.rows(), d = rep.cols();
    if (n < 2) throw ShapeError("redundancy metrics need n >= 2 samples");
    Matrix ranked(n, d);
    std::vector<double> col(n);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < n; ++i) col[i] = rep(i, j);
        const std::vector<double> r = average_ranks(col);
        for (int i = 0; i < n; ++i) ranked(i, j) = r[i];
    }
    return abs_corr_mean(extract_columns(ranked), pairs);
}

double mutual_information(const Matrix& rep, int bins, const PairSampling& pairs) {
    if (bins < 2) throw ConfigError("mutual_information: bins must be >= 2");
    const int n = rep.rows();
    if (n < 4 * bins)
        std::cerr << "warning: mutual_information has n=" << n << " < 4*bins=" << 4 * bins
                  << "; estimate will be strongly biased\n";
    // Bin each non-degenerate column over its own range.
    std::vector<std::vector<int>> binned;
    int dropped = 0;
    for (int j = 0; j < rep.cols(); ++j) {
        double lo = rep(0, j), hi = rep(0, j);
        for (int i = 1; i < n; ++i) {
            lo = std::min(lo, rep(i, j));
            hi = std::max(hi, rep(i, j));
        }
        if (hi <= lo) {
            ++dropped;
            continue;
        }
        std::vector<int> b(n);
        const double w = (hi - lo) / bins;
        for (int i = 0; i < n; ++i)
            b[i] = std::min(bins - 1, static_cast<int>((rep(i, j) - lo) / w));
        binned.push_back(std::move(b));
    }
    if (dropped > 0)
        std::cerr << "warning: mutual_information dropped " << dropped
                  << " zero-range column(s)\n";
    const int d = static_cast<int>(binned.size());
    if (d < 2) throw ShapeError("mutual_information: fewer than 2 usable columns");

    int64_t total = 0;
    bool sampled = false;
    const auto pair_list = select_pairs(d, pairs, total, sampled);
    std::vector<int64_t> joint(static_cast<size_t>(bins) * bins);
    std::vector<int64_t> px(bins), py(bins);
    double sum = 0.0;
    for (const auto& [a, b] : pair_list) {
        std::fill(joint.begin(), joint.end(), 0);
        std::fill(px.begin(), px.end(), 0);
        std::fill(py.begin(), py.end(), 0);
        for (int i = 0; i < n; ++i) {
            const int xi = binned[a][i], yi = binned[b][i];
            ++joint[static_cast<size_t>(xi) * bins + yi];
            ++px[xi];
            ++py[yi];
        }
        double mi = 0.0;
        const double dn = static_cast<double>(n);
        for (int x = 0; x < bins; ++x) {
            if (px[x] == 0) continue;
            for (int y = 0; y < bins; ++y) {
                const int64_t c = joint[static_cast<size_t>(x) * bins + y];
                if (c == 0 || py[y] == 0) continue;
                const double pxy = c / dn;
                mi += pxy * std::log(pxy * dn * dn / (static_cast<double>(px[x]) * py[y]));
            }
        }
        sum += mi;
    }
    // Report the sum over the full pair count, scaled from the sampled subset.
    return sum * (static_cast<double>(total) / static_cast<double>(pair_list.size()));
}

double pca_proportion(const Matrix& rep, double variance_target) {
    const int n = rep.rows(), d = rep.cols();
    if (n < 2 || d < 1) throw ShapeError("pca_proportion: need n >= 2, d >= 1");
    Eigen::MatrixXd x(n, d);
    for (int j = 0; j < d; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += rep(i, j);
        mean /= n;
        for (int i = 0; i < n; ++i) x(i, j) = rep(i, j) - mean;
    }
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("pca_proportion: eigensolver failed");
    Eigen::VectorXd ev = solver.eigenvalues();  // ascending
    double total = 0.0;
    for (int i = 0; i < d; ++i) total += std::max(0.0, ev(i));
    if (total <= 0.0) throw NumericError("pca_proportion: rank-0 representation");
    // 1e-12 slack absorbs roundoff so analytically-equal spectra hit the
    // target at the exact component count.
    double cum = 0.0;
    for (int k = 1; k <= d; ++k) {
        cum += std::max(0.0, ev(d - k));
        if (cum / total >= variance_target - 1e-12)
            return static_cast<double>(k) / static_cast<double>(d);
    }
    return 1.0;
}

RedundancyReport redundancy_report(const Matrix& rep, int mi_bins, const PairSampling& pairs) {
    RedundancyReport r;
    r.n = rep.rows();
    r.d = rep.cols();
    r.mi_bins = mi_bins;
    r.seed = pairs.seed;
    const Columns cols = extract_columns(rep);
    r.dropped_columns = cols.dropped;
    r.d_used = static_cast<int>(cols.cols.size());
    r.pairs_total = static_cast<int64_t>(r.d_used) * (r.d_used - 1) / 2;
    r.sampled = r.d_used > pairs.all_pairs_threshold && r.pairs_total > pairs.sample_count;
    r.pairs_sampled = r.sampled ? pairs.sample_count : r.pairs_total;
    r.pearson_abs = pearson_abs(rep, pairs);
    r.spearman_abs = spearman_abs(rep, pairs);
    r.mutual_info = mutual_information(rep, mi_bins, pairs);
    r.pca_proportion = csf::pca_proportion(rep);
    return r;
}

std::string RedundancyReport::to_text() const {
    std::ostringstream os;
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    os << "pearson_abs = " << num(pearson_abs) << "\n";
    os << "spearman_abs = " << num(spearman_abs) << "\n";
    os << "mutual_information = " << num(mutual_info) << "\n";
    os << "pca_proportion = " << num(pca_proportion) << "\n";
    os << "n = " << n << "\n";
    os << "d = " << d << "\n";
    os << "d_used = " << d_used << "\n";
    os << "dropped_columns = " << dropped_columns << "\n";
    os << "mi_bins = " << mi_bins << "\n";
    os << "mi_aggregation = scaled_sum\n";
    os << "pairs_total = " << pairs_total << "\n";
    os << "pairs_sampled = " << pairs_sampled << "\n";
    os << "sampled = " << (sampled ? "true" : "false") << "\n";
    os << "pair_seed = " << seed << "\n";
    return os.str();
}

}  // namespace csf
