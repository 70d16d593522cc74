// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <doctest.h>

#include "qy/errors.hpp"
#include "qy/quant.hpp"

using namespace qy;

namespace {

// Ranges in this system originate from float32 observations, so the spec
// examples are pinned at the float32 values of their literals.
ClipRange range_f(float lo, float hi) {
    return ClipRange{static_cast<double>(lo), static_cast<double>(hi)};
}

QuantParams manual_qp(double scale, int32_t zp, int bits, bool is_signed) {
    QuantParams qp;
    qp.bits = bits;
    qp.is_signed = is_signed;
    qp.scales = {scale};
    qp.zero_points = {zp};
    return qp;
}

}  // namespace

TEST_CASE("make_qparams identity grid") {
    const QuantParams qp = make_qparams(range_f(0.0f, 255.0f), 8, false, false);
    CHECK(qp.scales[0] == 1.0);
    CHECK(qp.zero_points[0] == 0);
    CHECK(qp.code_min() == 0);
    CHECK(qp.code_max() == 255);
}

TEST_CASE("make_qparams silu-bounded range hits the half-way zero point") {
    const QuantParams qp =
        make_qparams(range_f(-0.2785f, 0.2785f), 8, false, false);
    CHECK(qp.scales[0] == doctest::Approx(0.557 / 255.0).epsilon(1e-6));
    // -l/s is exactly 127.5 here; round-half-to-even must give 128.
    CHECK(qp.zero_points[0] == 128);
}

TEST_CASE("make_qparams symmetric signed") {
    const QuantParams qp = make_qparams(range_f(-1.0f, 3.0f), 8, true, true);
    CHECK(qp.scales[0] == 6.0 / 255.0);
    CHECK(qp.zero_points[0] == 0);
    CHECK(qp.is_signed);
    CHECK(qp.symmetric);
}

TEST_CASE("make_qparams rejects bad ranges and bit-widths") {
    CHECK_THROWS_AS(make_qparams(ClipRange{1.0, 1.0}, 8, false, false),
                    NonPositiveRange);
    CHECK_THROWS_AS(make_qparams(ClipRange{2.0, 1.0}, 8, false, false),
                    NonPositiveRange);
    CHECK_THROWS_AS(make_qparams(ClipRange{0.0, 1e-60}, 8, false, false),
                    DegenerateRange);
    CHECK_THROWS_AS(make_qparams(ClipRange{0.0, 1.0}, 1, false, false),
                    InvalidConfig);
    CHECK_THROWS_AS(make_qparams(ClipRange{0.0, 1.0}, 9, false, false),
                    InvalidConfig);
}

TEST_CASE("quantize grid point, saturation, and lower-bound code") {
    const QuantParams half = manual_qp(0.5, 0, 8, false);
    CHECK(quantize(Tensor({1}, {1.0f}), half).data[0] == 2);

    const QuantParams unit = manual_qp(1.0, 0, 8, false);
    CHECK(quantize(Tensor({1}, {1e6f}), unit).data[0] == 255);

    const QuantParams silu_qp =
        make_qparams(range_f(-0.2785f, 0.2785f), 8, false, false);
    CHECK(quantize(Tensor({1}, {-0.2785f}), silu_qp).data[0] == 0);
}

TEST_CASE("dequantize examples") {
    IntTensor q;
    q.shape = {1};
    q.data = {0};
    CHECK(dequantize(q, manual_qp(0.5, 0, 8, false)).data[0] == 0.0f);
    q.data = {255};
    CHECK(dequantize(q, manual_qp(1.0, 0, 8, false)).data[0] == 255.0f);
    q.data = {128};
    CHECK(dequantize(q, manual_qp(2.1843e-3, 128, 8, false)).data[0] == 0.0f);
}

TEST_CASE("fake_quantize sentinel and grid behaviour") {
    Tensor x({3}, {0.5f, 0.6f, -123.25f});
    const Tensor same = fake_quantize(x, QuantParams::identity_sentinel());
    CHECK(same.data == x.data);

    const QuantParams half = manual_qp(0.5, 0, 8, false);
    CHECK(fake_quantize(Tensor({1}, {0.5f}), half).data[0] == 0.5f);
    // 0.6/0.5 = 1.2 -> 1 -> 0.5
    CHECK(fake_quantize(Tensor({1}, {0.6f}), half).data[0] == 0.5f);
}

TEST_CASE("round-trip bound and idempotence over random configurations") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const int bits = 2 + static_cast<int>(rng() % 7);
        const bool sgn = (rng() & 1) != 0;
        const bool sym = (rng() & 1) != 0;
        const float lo = static_cast<float>(-10.0 * unit(rng) - 0.01);
        const float hi = static_cast<float>(10.0 * unit(rng) + 0.01);
        const QuantParams qp = make_qparams(range_f(lo, hi), bits, sgn, sym);
        const double s = qp.scales[0];
        const int32_t zp = qp.zero_points[0];
        const double grid_lo = (qp.code_min() - zp) * s;
        const double grid_hi = (qp.code_max() - zp) * s;

        const float x = static_cast<float>(30.0 * (unit(rng) - 0.5));
        const double fq =
            fake_quantize_scalar(x, s, zp, qp.code_min(), qp.code_max());
        const double clamped =
            std::min(grid_hi, std::max(grid_lo, static_cast<double>(x)));
        CHECK(std::fabs(fq - clamped) <= s / 2.0 * (1.0 + 1e-9));

        // Grid fixpoint: re-quantizing the float result is bit-stable.
        Tensor t({1}, {x});
        const Tensor once = fake_quantize(t, qp);
        const Tensor twice = fake_quantize(once, qp);
        CHECK(once.data[0] == twice.data[0]);
    }
}

TEST_CASE("scale formula and symmetric zero point over random ranges") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const int bits = 2 + static_cast<int>(rng() % 7);
        const double lo = -100.0 * unit(rng) - 1e-3;
        const double hi = 100.0 * unit(rng) + 1e-3;
        const QuantParams qp =
            make_qparams(ClipRange{lo, hi}, bits, false, false);
        const double expected = (hi - lo) / static_cast<double>((1 << bits) - 1);
        CHECK(qp.scales[0] <= std::nextafter(expected, 1e300));
        CHECK(qp.scales[0] >= std::nextafter(expected, -1e300));

        const QuantParams sym =
            make_qparams(ClipRange{lo, hi}, bits, true, true);
        CHECK(sym.zero_points[0] == 0);
        IntTensor zero;
        zero.shape = {1};
        zero.data = {0};
        CHECK(dequantize(zero, sym).data[0] == 0.0f);
    }
}

TEST_CASE("per-channel equals per-tensor applied slice-wise") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<float> unit(-3.0f, 5.0f);
    Tensor x = Tensor::zeros({4, 3, 2, 2});
    for (float& v : x.data) v = unit(rng);

    const int64_t per_ch = x.numel() / x.shape[0];
    std::vector<ClipRange> ranges;
    for (int64_t c = 0; c < x.shape[0]; ++c) {
        float mn = x.data[static_cast<size_t>(c * per_ch)];
        float mx = mn;
        for (int64_t i = 0; i < per_ch; ++i) {
            const float v = x.data[static_cast<size_t>(c * per_ch + i)];
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        ranges.push_back(range_f(mn, mx));
    }
    const QuantParams pc = make_qparams_per_channel(ranges, 0, 4, true, true);
    const Tensor whole = fake_quantize(x, pc);

    for (int64_t c = 0; c < x.shape[0]; ++c) {
        const QuantParams pt = make_qparams(ranges[static_cast<size_t>(c)], 4,
                                            true, true);
        Tensor slice = Tensor::zeros({3, 2, 2});
        for (int64_t i = 0; i < per_ch; ++i) {
            slice.data[static_cast<size_t>(i)] =
                x.data[static_cast<size_t>(c * per_ch + i)];
        }
        const Tensor fq_slice = fake_quantize(slice, pt);
        for (int64_t i = 0; i < per_ch; ++i) {
            CHECK(whole.data[static_cast<size_t>(c * per_ch + i)] ==
                  fq_slice.data[static_cast<size_t>(i)]);
        }
    }
}

TEST_CASE("per-channel axis beyond rank is rejected") {
    const QuantParams pc = make_qparams_per_channel(
        {ClipRange{-1.0, 1.0}, ClipRange{-2.0, 2.0}}, 3, 8, true, true);
    Tensor x = Tensor::zeros({2, 2});
    CHECK_THROWS_AS(quantize(x, pc), ShapeMismatch);
}
