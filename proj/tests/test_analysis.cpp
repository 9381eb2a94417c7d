#include <doctest.h>

#include <cmath>
#include <vector>

#include "csf/analysis.hpp"
#include "csf/rng.hpp"

using namespace csf;

namespace {

Matrix from_columns(const std::vector<std::vector<double>>& cols) {
    Matrix m(static_cast<int>(cols[0].size()), static_cast<int>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j)
        for (size_t i = 0; i < cols[j].size(); ++i)
            m(static_cast<int>(i), static_cast<int>(j)) = cols[j][i];
    return m;
}

// Direct covariance-formula Pearson for the oracle.
double pearson_ref(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0, mb = 0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_SUITE_BEGIN("analysis");

TEST_CASE("error_metrics") {
    SUBCASE("identical -> (0,0)") {
        const std::vector<double> x = {1.0, 2.0, 3.0};
        const ErrorMetrics m = error_metrics(x, x);
        CHECK(m.mse == 0.0);
        CHECK(m.mae == 0.0);
    }
    SUBCASE("constant offset 1 -> (1,1)") {
        const std::vector<double> t = {1.0, -2.0, 0.5, 4.0};
        std::vector<double> p = t;
        for (double& v : p) v += 1.0;
        const ErrorMetrics m = error_metrics(p, t);
        CHECK(m.mse == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(m.mae == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("random pair matches hand summation") {
        Rng rng(1);
        std::vector<double> p(10), t(10);
        for (int i = 0; i < 10; ++i) {
            p[i] = rng.uniform(-5, 5);
            t[i] = rng.uniform(-5, 5);
        }
        double mse = 0, mae = 0;
        for (int i = 0; i < 10; ++i) {
            mse += (p[i] - t[i]) * (p[i] - t[i]);
            mae += std::abs(p[i] - t[i]);
        }
        const ErrorMetrics m = error_metrics(p, t);
        CHECK(m.mse == mse / 10.0);
        CHECK(m.mae == mae / 10.0);
    }
    SUBCASE("length mismatch rejected") {
        const std::vector<double> a = {1.0}, b = {1.0, 2.0};
        CHECK_THROWS_AS(error_metrics(a, b), ShapeError);
    }
}

TEST_CASE("classification_metrics") {
    SUBCASE("perfect predictions") {
        const std::vector<int> y = {0, 1, 2, 1, 0};
        const ClassificationMetrics m = classification_metrics(y, y, 3);
        CHECK(m.accuracy == 1.0);
        CHECK(m.macro_f1 == 1.0);
    }
    SUBCASE("binary all-zero predictions on balanced truth") {
        const std::vector<int> pred(10, 0);
        std::vector<int> truth;
        for (int i = 0; i < 10; ++i) truth.push_back(i % 2);
        const ClassificationMetrics m = classification_metrics(pred, truth, 2);
        CHECK(m.accuracy == doctest::Approx(0.5));
        CHECK(m.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("single correct sample") {
        const std::vector<int> one = {2};
        const ClassificationMetrics m = classification_metrics(one, one, 4);
        CHECK(m.accuracy == 1.0);
        CHECK(m.macro_f1 == 1.0);  // classes absent from both sides excluded
    }
    SUBCASE("label out of range") {
        const std::vector<int> p = {5}, t = {0};
        CHECK_THROWS_AS(classification_metrics(p, t, 3), IndexError);
    }
}

TEST_CASE("pearson_abs") {
    SUBCASE("identical columns -> 1") {
        const Matrix m = from_columns({{1, 2, 3, 4}, {1, 2, 3, 4}});
        CHECK(pearson_abs(m) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("perfect anticorrelation -> 1") {
        const Matrix m = from_columns({{1, 2, 3, 4}, {4, 3, 2, 1}});
        CHECK(pearson_abs(m) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("matches the direct formula") {
        const std::vector<double> a = {1, 2, 3, 4};
        const std::vector<double> b = {1, -1, 1, -1};
        const Matrix m = from_columns({a, b});
        CHECK(pearson_abs(m) == doctest::Approx(std::abs(pearson_ref(a, b))).epsilon(1e-12));
    }
    SUBCASE("mean over all pairs") {
        Rng rng(3);
        std::vector<std::vector<double>> cols(4, std::vector<double>(50));
        for (auto& c : cols)
            for (double& v : c) v = rng.uniform(-1, 1);
        double want = 0.0;
        int pairs = 0;
        for (size_t i = 0; i < 4; ++i)
            for (size_t j = i + 1; j < 4; ++j) {
                want += std::abs(pearson_ref(cols[i], cols[j]));
                ++pairs;
            }
        CHECK(pearson_abs(from_columns(cols)) == doctest::Approx(want / pairs).epsilon(1e-12));
    }
    SUBCASE("constant columns dropped; too few left is an error") {
        const Matrix ok = from_columns({{1, 2, 3}, {5, 5, 5}, {2, 1, 0}});
        CHECK(pearson_abs(ok) == doctest::Approx(1.0).epsilon(1e-12));  // only the +-1 pair left
        const Matrix bad = from_columns({{1, 2, 3}, {5, 5, 5}});
        CHECK_THROWS_AS(pearson_abs(bad), ShapeError);
    }
}

TEST_CASE("pearson/spearman invariance under positive affine maps") {
    Rng rng(5);
    std::vector<std::vector<double>> cols(3, std::vector<double>(40));
    for (auto& c : cols)
        for (double& v : c) v = rng.uniform(-2, 2);
    const double base_p = pearson_abs(from_columns(cols));
    const double base_s = spearman_abs(from_columns(cols));
    auto scaled = cols;
    for (auto& c : scaled)
        for (double& v : c) v = 3.5 * v + 7.0;
    CHECK(pearson_abs(from_columns(scaled)) == doctest::Approx(base_p).epsilon(1e-10));
    CHECK(spearman_abs(from_columns(scaled)) == doctest::Approx(base_s).epsilon(1e-10));
    // spearman additionally survives any strictly monotone map
    auto warped = cols;
    for (auto& c : warped)
        for (double& v : c) v = std::exp(v);
    CHECK(spearman_abs(from_columns(warped)) == doctest::Approx(base_s).epsilon(1e-10));
}

TEST_CASE("spearman_abs") {
    SUBCASE("monotone transform of a column -> 1") {
        std::vector<double> a = {0.1, 0.7, 0.3, 2.0, 1.1};
        std::vector<double> b;
        for (const double v : a) b.push_back(std::exp(3.0 * v));
        const Matrix m = from_columns({a, b});
        CHECK(spearman_abs(m) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("reversed ranks -> 1") {
        const Matrix m = from_columns({{1, 2, 3, 4, 5}, {9, 7, 5, 3, 1}});
        CHECK(spearman_abs(m) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("tie handling matches hand-ranked computation") {
        // column a has a tie at value 2 (positions 2,3 -> average rank 3.5)
        const std::vector<double> a = {1, 3, 2, 2, 0, 4};
        const std::vector<double> b = {2, 6, 4, 5, 1, 9};
        const std::vector<double> ra = {2, 5, 3.5, 3.5, 1, 6};
        const std::vector<double> rb = {2, 5, 3, 4, 1, 6};
        CHECK(average_ranks(a) == ra);
        const Matrix m = from_columns({a, b});
        CHECK(spearman_abs(m) ==
              doctest::Approx(std::abs(pearson_ref(ra, rb))).epsilon(1e-12));
    }
}

TEST_CASE("mutual_information") {
    SUBCASE("self-pair approaches the binned entropy bound") {
        Rng rng(7);
        const int n = 100000;
        std::vector<double> x(n);
        for (double& v : x) v = rng.uniform(0, 1);
        const Matrix m = from_columns({x, x});
        const double mi = mutual_information(m, 16);
        CHECK(mi < std::log(16.0) + 1e-9);
        CHECK(mi == doctest::Approx(std::log(16.0)).epsilon(0.01));
    }
    SUBCASE("independent uniforms are near zero") {
        Rng rng(11);
        const int n = 100000;
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.uniform(0, 1);
            y[i] = rng.uniform(0, 1);
        }
        const double mi = mutual_information(from_columns({x, y}), 16);
        CHECK(mi >= 0.0);
        CHECK(mi < 0.01);
    }
    SUBCASE("sum aggregation over full pairs") {
        Rng rng(13);
        const int n = 5000;
        std::vector<std::vector<double>> cols(3, std::vector<double>(n));
        for (auto& c : cols)
            for (double& v : c) v = rng.uniform(0, 1);
        double pair_sum = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                pair_sum += mutual_information(from_columns({cols[i], cols[j]}), 16);
        CHECK(mutual_information(from_columns(cols), 16) ==
              doctest::Approx(pair_sum).epsilon(1e-9));
    }
}

TEST_CASE("pca_proportion") {
    SUBCASE("isotropic d=10 spectrum -> 0.8") {
        // rows I and -I give exactly isotropic sample covariance
        Matrix m(20, 10);
        for (int i = 0; i < 10; ++i) {
            m(i, i) = 2.0;
            m(10 + i, i) = -2.0;
        }
        CHECK(pca_proportion(m) == doctest::Approx(0.8).epsilon(1e-15));
    }
    SUBCASE("one dominant direction -> 0.1") {
        Matrix m(20, 10);
        m(0, 0) = 10.0;
        m(10, 0) = -10.0;
        for (int i = 1; i < 10; ++i) {
            m(i, i) = 1.0;
            m(10 + i, i) = -1.0;
        }
        // spectrum: 100 vs nine 1s -> first PC explains 100/109 > 0.8
        CHECK(pca_proportion(m) == doctest::Approx(0.1).epsilon(1e-15));
    }
    SUBCASE("d=1 -> 1.0") {
        Matrix m(5, 1);
        for (int i = 0; i < 5; ++i) m(i, 0) = i;
        CHECK(pca_proportion(m) == 1.0);
    }
    SUBCASE("rank-0 rejected") {
        const Matrix zeros(6, 3);
        CHECK_THROWS_AS(pca_proportion(zeros), NumericError);
    }
    SUBCASE("invariant under orthogonal rotation") {
        Rng rng(17);
        Matrix m(40, 6);
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 6; ++j) m(i, j) = rng.uniform(-1, 1) * (j + 1);
        const double base = pca_proportion(m);
        // build a rotation from QR of a random matrix (Gram-Schmidt)
        std::vector<std::vector<double>> q;
        for (int c = 0; c < 6; ++c) {
            std::vector<double> v(6);
            for (double& x : v) x = rng.normal();
            for (const auto& u : q) {
                double dot = 0;
                for (int i = 0; i < 6; ++i) dot += v[i] * u[i];
                for (int i = 0; i < 6; ++i) v[i] -= dot * u[i];
            }
            double norm = 0;
            for (const double x : v) norm += x * x;
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
            q.push_back(v);
        }
        Matrix rotated(40, 6);
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 6; ++j) {
                double s = 0;
                for (int k = 0; k < 6; ++k) s += m(i, k) * q[j][k];
                rotated(i, j) = s;
            }
        CHECK(pca_proportion(rotated) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("redundancy_report is deterministic and in range") {
    Rng rng(19);
    Matrix m(64, 12);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 12; ++j) m(i, j) = rng.normal();
    PairSampling pairs;
    pairs.seed = 5;
    const RedundancyReport a = redundancy_report(m, 16, pairs);
    const RedundancyReport b = redundancy_report(m, 16, pairs);
    CHECK(a.pearson_abs == b.pearson_abs);
    CHECK(a.spearman_abs == b.spearman_abs);
    CHECK(a.mutual_info == b.mutual_info);
    CHECK(a.pca_proportion == b.pca_proportion);
    CHECK(a.to_text() == b.to_text());
    CHECK(a.pearson_abs >= 0.0);
    CHECK(a.pearson_abs <= 1.0);
    CHECK(a.spearman_abs >= 0.0);
    CHECK(a.spearman_abs <= 1.0);
    CHECK(a.mutual_info >= 0.0);
    CHECK(a.pca_proportion > 0.0);
    CHECK(a.pca_proportion <= 1.0);
    CHECK(a.n == 64);
    CHECK(a.d == 12);
    CHECK(!a.sampled);
}

TEST_CASE("pair sampling kicks in above the threshold") {
    Rng rng(23);
    Matrix m(32, 40);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 40; ++j) m(i, j) = rng.normal();
    PairSampling pairs;
    pairs.all_pairs_threshold = 16;
    pairs.sample_count = 50;
    pairs.seed = 7;
    // sampled estimates stay in range and deterministic
    const double p1 = pearson_abs(m, pairs);
    const double p2 = pearson_abs(m, pairs);
    CHECK(p1 == p2);
    CHECK(p1 >= 0.0);
    CHECK(p1 <= 1.0);
    const double mi1 = mutual_information(m, 8, pairs);
    const double mi2 = mutual_information(m, 8, pairs);
    CHECK(mi1 == mi2);
    // scaled sum over 780 pairs from a 50-pair sample
    CHECK(mi1 > 0.0);
}

TEST_SUITE_END();
