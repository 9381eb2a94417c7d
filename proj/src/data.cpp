#include "csf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csf/errors.hpp"

namespace csf {

NormRecord compute_norm(std::span<const double> values) {
    if (values.empty()) throw DataError("compute_norm: empty window");
    NormRecord n;
    double sum = 0.0;
    for (const double v : values) sum += v;
    n.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (const double v : values) {
        const double d = v - n.mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(values.size());
    if (var <= 0.0) {
        n.std = 1.0;
        n.constant = true;
    } else {
        n.std = std::sqrt(var);
    }
    return n;
}

std::vector<double> normalize(std::span<const double> values, const NormRecord& n) {
    std::vector<double> out(values.size());
    for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - n.mean) / n.std;
    return out;
}

std::vector<double> denormalize(std::span<const double> values, const NormRecord& n) {
    std::vector<double> out(values.size());
    for (size_t i = 0; i < values.size(); ++i) out[i] = values[i] * n.std + n.mean;
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_cell(const std::string& cell, size_t row, const std::string& col) {
    try {
        size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw std::invalid_argument("trailing junk");
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
        return v;
    } catch (const std::exception&) {
        throw DataError("csv parse error at row " + std::to_string(row) + ", column '" + col +
                        "': '" + cell + "' is not a finite number");
    }
}

}  // namespace

std::vector<NamedSeries> load_ett_csv(const std::string& path, const DatasetManifest& manifest) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open csv: " + path);
    std::string line;
    if (!std::getline(is, line)) throw DataError("csv has no header row: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2) throw DataError("csv needs a timestamp column plus features: " + path);

    // First column is the timestamp; the rest are features.
    std::vector<std::string> feature_cols(header.begin() + 1, header.end());
    if (!manifest.columns.empty()) {
        for (const std::string& want : manifest.columns) {
            if (std::find(feature_cols.begin(), feature_cols.end(), want) == feature_cols.end())
                throw DataError("csv missing declared column '" + want + "' in " + path);
        }
        feature_cols = manifest.columns;
    }
    std::vector<int> col_index(feature_cols.size());
    for (size_t i = 0; i < feature_cols.size(); ++i) {
        const auto it = std::find(header.begin(), header.end(), feature_cols[i]);
        col_index[i] = static_cast<int>(it - header.begin());
    }

    std::vector<NamedSeries> series(feature_cols.size());
    for (size_t i = 0; i < feature_cols.size(); ++i) series[i].name = feature_cols[i];

    size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("csv row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        for (size_t i = 0; i < feature_cols.size(); ++i)
            series[i].values.push_back(parse_cell(fields[col_index[i]], row, feature_cols[i]));
    }
    return series;
}

std::vector<Sample> load_ucr(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open ucr file: " + path);
    std::vector<Sample> out;
    std::string line;
    size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        for (char& c : line)
            if (c == ',' || c == '\t') c = ' ';
        std::stringstream ss(line);
        double label_raw;
        if (!(ss >> label_raw))
            throw DataError("ucr row " + std::to_string(row) + ": missing label");
        Sample s;
        s.label = static_cast<int>(std::llround(label_raw));
        double v;
        while (ss >> v) {
            if (!std::isfinite(v))
                throw DataError("ucr row " + std::to_string(row) + ": non-finite value");
            s.values.push_back(v);
        }
        if (s.values.empty())
            throw DataError("ucr row " + std::to_string(row) + ": no values after label");
        s.source = path + ":" + std::to_string(row);
        out.push_back(std::move(s));
    }
    if (out.empty()) throw DataError("ucr file is empty: " + path);
    return out;
}

void SplitSpec::validate() const {
    if (train_frac <= 0.0 || val_frac < 0.0 || test_frac < 0.0)
        throw ConfigError("split fractions must be positive (train) / non-negative");
    if (train_frac + val_frac + test_frac > 1.0 + 1e-9)
        throw ConfigError("split fractions must sum to <= 1");
}

SplitRanges chronological_split(int64_t n, const SplitSpec& spec) {
    spec.validate();
    SplitRanges r;
    const int64_t n_train = static_cast<int64_t>(std::floor(n * spec.train_frac));
    const int64_t n_val = static_cast<int64_t>(std::floor(n * spec.val_frac));
    const int64_t n_test = static_cast<int64_t>(std::floor(n * spec.test_frac));
    r.train = {0, n_train};
    r.val = {n_train, n_train + n_val};
    r.test = {n_train + n_val, n_train + n_val + n_test};
    return r;
}

std::vector<Sample> sliding_window_varlen(const NamedSeries& series, const IndexRange& range,
                                          int min_len, int max_len, int horizon, int anchor_stride,
                                          Rng& rng) {
    if (min_len < 1 || max_len < min_len || horizon < 1)
        throw ConfigError("sliding_window_varlen: bad length bounds");
    if (anchor_stride < 1) anchor_stride = horizon;
    const int64_t lo = range.begin + min_len;
    const int64_t hi = range.end - horizon;  // inclusive anchor bound
    if (lo > hi)
        throw LengthError("series range too short for min_len " + std::to_string(min_len) +
                          " + horizon " + std::to_string(horizon));
    std::vector<Sample> out;
    for (int64_t t = lo; t <= hi; t += anchor_stride) {
        const int64_t t_cap = std::min<int64_t>(max_len, t - range.begin);
        const int len = static_cast<int>(rng.uniform_int(min_len, t_cap));
        Sample s;
        s.values.assign(series.values.begin() + (t - len), series.values.begin() + t);
        s.target.assign(series.values.begin() + t, series.values.begin() + t + horizon);
        s.norm = compute_norm(s.values);
        s.source = series.name + "@" + std::to_string(t);
        out.push_back(std::move(s));
    }
    return out;
}

Sample subsample_ucr(const Sample& original, int min_len, Rng& rng, bool crop) {
    const int n = static_cast<int>(original.values.size());
    if (n < min_len)
        throw LengthError("subsample_ucr: original length " + std::to_string(n) + " < min " +
                          std::to_string(min_len));
    const int target_len = static_cast<int>(rng.uniform_int(min_len, n));
    Sample s;
    s.label = original.label;
    s.source = original.source;
    if (crop) {
        const int start = static_cast<int>(rng.uniform_int(0, n - target_len));
        s.values.assign(original.values.begin() + start,
                        original.values.begin() + start + target_len);
    } else {
        // Order-preserving uniform subset: include index i with probability
        // (remaining picks) / (remaining items).
        s.values.reserve(target_len);
        int need = target_len;
        for (int i = 0; i < n && need > 0; ++i) {
            const int left = n - i;
            if (rng.uniform() * left < need) {
                s.values.push_back(original.values[i]);
                --need;
            }
        }
    }
    s.norm = compute_norm(s.values);
    return s;
}

std::vector<Sample> synth_generate(const SynthConfig& cfg, Rng& rng) {
    if (cfg.count < 1 || cfg.min_len < 2 || cfg.max_len < cfg.min_len)
        throw ConfigError("synth_generate: bad count/length bounds");
    std::vector<Sample> out;
    out.reserve(cfg.count);
    for (int s = 0; s < cfg.count; ++s) {
        const int len = static_cast<int>(rng.uniform_int(cfg.min_len, cfg.max_len));
        const int total = len + std::max(0, cfg.horizon);
        Sample sample;
        std::vector<double> x(total);
        if (cfg.kind == "sine") {
            const double period1 = rng.uniform(24.0, 96.0);
            const double period2 = rng.uniform(128.0, 512.0);
            const double amp1 = rng.uniform(0.5, 1.5);
            const double amp2 = rng.uniform(0.25, 1.0);
            const double phase1 = rng.uniform(0.0, 2.0 * M_PI);
            const double phase2 = rng.uniform(0.0, 2.0 * M_PI);
            for (int t = 0; t < total; ++t)
                x[t] = amp1 * std::sin(2.0 * M_PI * t / period1 + phase1) +
                       amp2 * std::sin(2.0 * M_PI * t / period2 + phase2) +
                       cfg.noise * rng.normal();
        } else if (cfg.kind == "ar1") {
            double prev = 0.0;
            for (int t = 0; t < total; ++t) {
                prev = cfg.ar_coeff * prev + rng.normal();
                x[t] = prev;
            }
        } else if (cfg.kind == "classes") {
            // Fixed-phase templates at well-separated frequencies.
            const int cls = static_cast<int>(rng.uniform_int(0, cfg.num_classes - 1));
            const double period = 16.0 * std::pow(2.0, cls);
            for (int t = 0; t < total; ++t)
                x[t] = std::sin(2.0 * M_PI * t / period) + cfg.noise * rng.normal();
            sample.label = cls;
        } else {
            throw ConfigError("synth_generate: unknown kind '" + cfg.kind + "'");
        }
        sample.values.assign(x.begin(), x.begin() + len);
        if (cfg.horizon > 0 && cfg.kind != "classes")
            sample.target.assign(x.begin() + len, x.end());
        sample.norm = compute_norm(sample.values);
        sample.source = "synthetic:" + cfg.kind + ":" + std::to_string(s);
        out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace csf
