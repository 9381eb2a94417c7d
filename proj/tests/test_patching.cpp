#include <doctest.h>

#include <cmath>
#include <vector>

#include "csf/patching.hpp"
#include "csf/rng.hpp"

using namespace csf;

namespace {

std::vector<double> ramp(int n) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = static_cast<double>(i);
    return x;
}

// Enumeration oracle: count window start indices directly.
int count_windows(int t, int l_p, int s_p) {
    int n = 0;
    for (int start = 0; start + l_p <= t; start += s_p) ++n;
    return n;
}

}  // namespace

TEST_SUITE_BEGIN("patching");

TEST_CASE("patch_series basic shapes and contents") {
    PatchConfig cfg;
    SUBCASE("single window equals the series") {
        const std::vector<double> x = ramp(16);
        const Matrix p = patch_series(x, cfg);
        CHECK(p.rows() == 16);
        CHECK(p.cols() == 1);
        for (int i = 0; i < 16; ++i) CHECK(p(i, 0) == x[i]);
    }
    SUBCASE("window counts match enumeration") {
        CHECK(patch_count(2048, cfg) == count_windows(2048, 16, 16));
        CHECK(patch_count(2048, cfg) == 128);
        CHECK(patch_count(512, cfg) == count_windows(512, 16, 16));
        CHECK(patch_count(512, cfg) == 32);
    }
    SUBCASE("column p holds x[p*s : p*s + l]") {
        const std::vector<double> x = ramp(80);
        const Matrix p = patch_series(x, cfg);
        for (int j = 0; j < p.cols(); ++j)
            for (int i = 0; i < 16; ++i) CHECK(p(i, j) == x[j * 16 + i]);
    }
    SUBCASE("too-short series rejected") {
        const std::vector<double> x = ramp(15);
        CHECK_THROWS_AS(patch_series(x, cfg), LengthError);
    }
}

TEST_CASE("schedule at defaults") {
    PatchConfig cfg;
    SUBCASE("T=2048: 7 layers up to d=2048") {
        const PyramidSchedule s = schedule(2048, cfg);
        CHECK(s.initial_patches == 128);
        CHECK(s.activated_layers == 7);
        CHECK(s.layers.back().channel_dim == 2048);
        CHECK(s.layers.back().patch_count == 1);
        int expect_p = 128;
        int expect_d = 16;
        for (const LayerShape& l : s.layers) {
            expect_p = (expect_p + 1) / 2;
            expect_d *= 2;
            CHECK(l.patch_count == expect_p);
            CHECK(l.channel_dim == expect_d);
            CHECK(l.pad_patches < cfg.repatch_len);
        }
    }
    SUBCASE("T=16 activates nothing") {
        const PyramidSchedule s = schedule(16, cfg);
        CHECK(s.initial_patches == 1);
        CHECK(s.activated_layers == 0);
    }
    SUBCASE("527/528 boundary") {
        CHECK(schedule(527, cfg).activated_layers == 5);
        CHECK(schedule(528, cfg).activated_layers == 6);
    }
    SUBCASE("length bounds enforced") {
        CHECK_THROWS_AS(schedule(15, cfg), LengthError);
        CHECK_THROWS_AS(schedule(2049, cfg), LengthError);
    }
}

TEST_CASE("repatch_matrix grouping and padding") {
    SUBCASE("exact divisibility") {
        Matrix h(3, 4);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) h(i, j) = 10.0 * j + i;
        const Matrix out = repatch_matrix(h, 2);
        CHECK(out.rows() == 6);
        CHECK(out.cols() == 2);
        for (int i = 0; i < 3; ++i) {
            CHECK(out(i, 0) == h(i, 0));
            CHECK(out(3 + i, 0) == h(i, 1));
            CHECK(out(i, 1) == h(i, 2));
            CHECK(out(3 + i, 1) == h(i, 3));
        }
    }
    SUBCASE("odd count pads the last group with zeros") {
        Matrix h(2, 5);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 5; ++j) h(i, j) = 1.0 + i + j;
        const Matrix out = repatch_matrix(h, 2);
        CHECK(out.rows() == 4);
        CHECK(out.cols() == 3);
        CHECK(out(0, 2) == h(0, 4));
        CHECK(out(1, 2) == h(1, 4));
        CHECK(out(2, 2) == 0.0);
        CHECK(out(3, 2) == 0.0);
    }
    SUBCASE("single patch") {
        Matrix h = Matrix::full(3, 1, 2.0);
        const Matrix out = repatch_matrix(h, 2);
        CHECK(out.rows() == 6);
        CHECK(out.cols() == 1);
        for (int i = 0; i < 3; ++i) {
            CHECK(out(i, 0) == 2.0);
            CHECK(out(3 + i, 0) == 0.0);
        }
    }
}

TEST_CASE("repatch never drops data") {
    Rng rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + static_cast<int>(rng.uniform_int(0, 4));
        const int p = 1 + static_cast<int>(rng.uniform_int(0, 12));
        const int l_rp = 2 + static_cast<int>(rng.uniform_int(0, 2));
        Matrix h(d, p);
        for (double& x : h.vec()) x = rng.uniform(0.5, 2.0);  // nonzero so padding is detectable
        const Matrix out = repatch_matrix(h, l_rp);
        // every input entry appears exactly once, padding is exactly zero
        int nonzero = 0;
        for (int j = 0; j < out.cols(); ++j)
            for (int k = 0; k < l_rp; ++k)
                for (int i = 0; i < d; ++i) {
                    const int src = j * l_rp + k;
                    const double v = out(k * d + i, j);
                    if (src < p) {
                        CHECK(v == h(i, src));
                        ++nonzero;
                    } else {
                        CHECK(v == 0.0);
                    }
                }
        CHECK(nonzero == d * p);
    }
}

TEST_CASE("repatch_mask marks a group real when any member is real") {
    const std::vector<uint8_t> mask = {0, 0, 0, 1, 1};
    const std::vector<uint8_t> out = repatch_mask(mask, 2);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == 0);
    CHECK(out[1] == 0);  // contains real patch 2
    CHECK(out[2] == 1);  // both padded
}

TEST_CASE("length_interval formula") {
    PatchConfig cfg;
    SUBCASE("L=5 -> [272, 527]") {
        const LengthInterval iv = length_interval(5, cfg);
        CHECK(iv.lo == 272);
        CHECK(iv.hi == 527);
    }
    SUBCASE("L=7 clipped to max_len") {
        const LengthInterval iv = length_interval(7, cfg);
        CHECK(iv.lo == 1040);
        CHECK(iv.hi == 2048);
    }
    SUBCASE("L=1 -> [32, 47]") {
        const LengthInterval iv = length_interval(1, cfg);
        CHECK(iv.lo == 32);
        CHECK(iv.hi == 47);
    }
    SUBCASE("unreachable L is empty") {
        CHECK(length_interval(8, cfg).empty());
    }
    SUBCASE("L=0 rejected") {
        CHECK_THROWS_AS(length_interval(0, cfg), LengthError);
    }
}

TEST_CASE("schedule and length_interval agree for all valid lengths") {
    PatchConfig cfg;
    for (int t = cfg.patch_len; t <= cfg.max_len; ++t) {
        const int layers = schedule(t, cfg).activated_layers;
        if (layers == 0) {
            CHECK(t < length_interval(1, cfg).lo);
            continue;
        }
        const LengthInterval iv = length_interval(layers, cfg);
        CHECK(t >= iv.lo);
        CHECK(t <= iv.hi);
    }
}

TEST_CASE("segment_of formula and partition property") {
    PatchConfig cfg;
    const PyramidSchedule s = schedule(640, cfg);  // P0 = 40, L = 6
    REQUIRE(s.activated_layers == 6);
    SUBCASE("first group at layer 1") {
        const SegmentMap m = segment_of(1, 0, s, cfg);
        CHECK(m.start == 0);
        CHECK(m.end == 2);
    }
    SUBCASE("layer 3 patch 1 covers [8, 16)") {
        const SegmentMap m = segment_of(3, 1, s, cfg);
        CHECK(m.start == 8);
        CHECK(m.end == 16);
    }
    SUBCASE("root covers the whole padded sequence") {
        const SegmentMap m = segment_of(s.activated_layers, 0, s, cfg);
        CHECK(m.start == 0);
        CHECK(m.end == 64);  // 2^6 * P^6 with P^6 == 1
    }
    SUBCASE("out-of-range rejected") {
        CHECK_THROWS_AS(segment_of(0, 0, s, cfg), IndexError);
        CHECK_THROWS_AS(segment_of(7, 0, s, cfg), IndexError);
        CHECK_THROWS_AS(segment_of(1, 20, s, cfg), IndexError);
    }
    SUBCASE("segments partition the padded range at every layer") {
        for (int l = 1; l <= s.activated_layers; ++l) {
            int64_t group = 1;
            for (int i = 0; i < l; ++i) group *= cfg.repatch_len;
            const int64_t padded = group * s.layers[l - 1].patch_count;
            int64_t expect = 0;
            for (int p = 0; p < s.layers[l - 1].patch_count; ++p) {
                const SegmentMap m = segment_of(l, p, s, cfg);
                CHECK(m.start == expect);
                expect = m.end;
            }
            CHECK(expect == padded);
        }
    }
}

TEST_CASE("ceil-division reaches one patch for random configurations") {
    Rng rng(67);
    for (int trial = 0; trial < 200; ++trial) {
        const int64_t p0 = rng.uniform_int(1, 4096);
        const int l_rp = static_cast<int>(rng.uniform_int(2, 4));
        const int layers = activated_layers_for_patches(p0, l_rp);
        int64_t p = p0;
        for (int l = 0; l < layers; ++l) p = (p + l_rp - 1) / l_rp;
        CHECK(p == 1);
        if (layers > 0) {
            // one fewer application must not reach 1
            int64_t q = p0;
            for (int l = 0; l + 1 < layers; ++l) q = (q + l_rp - 1) / l_rp;
            CHECK(q > 1);
        }
    }
}

TEST_CASE("feature volume never shrinks, equality iff divisible") {
    PatchConfig cfg;
    for (int t : {512, 527, 640, 1040, 2048}) {
        const PyramidSchedule s = schedule(t, cfg);
        const int64_t v0 = static_cast<int64_t>(cfg.base_dim) * s.initial_patches;
        bool all_divisible = true;
        int prev = s.initial_patches;
        for (const LayerShape& l : s.layers) {
            const int64_t v = static_cast<int64_t>(l.channel_dim) * l.patch_count;
            CHECK(v >= v0);
            if (prev % cfg.repatch_len != 0) all_divisible = false;
            if (all_divisible) CHECK(v == v0);
            prev = l.patch_count;
        }
    }
    // T=2048 divides evenly at every level: exact volume conservation
    const PyramidSchedule s = schedule(2048, cfg);
    for (const LayerShape& l : s.layers)
        CHECK(static_cast<int64_t>(l.channel_dim) * l.patch_count == 16 * 128);
}

TEST_SUITE_END();
