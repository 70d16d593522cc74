// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "qy/tensor.hpp"

namespace qy {

/// Clipping thresholds of the quantization grid.
struct ClipRange {
    double lower = 0.0;
    double upper = 0.0;

    /// Throws NonPositiveRange if upper <= lower or either bound is not finite.
    void validate() const;
};

enum class Granularity { per_tensor, per_channel };

/// Affine quantization parameters. Per-tensor params hold one (scale,
/// zero_point) pair; per-channel params hold one pair per slice along `axis`.
/// bits == 32 is the identity sentinel: fake_quantize passes tensors through
/// unchanged, which lets weights-only / activation-only modes share one path.
struct QuantParams {
    int bits = 32;
    bool is_signed = false;
    bool symmetric = false;
    Granularity granularity = Granularity::per_tensor;
    int axis = 0;
    std::vector<double> scales;
    std::vector<int32_t> zero_points;

    bool identity() const { return bits == 32; }
    int32_t code_min() const { return is_signed ? -(1 << (bits - 1)) : 0; }
    int32_t code_max() const {
        return is_signed ? (1 << (bits - 1)) - 1 : (1 << bits) - 1;
    }
    int channels() const { return static_cast<int>(scales.size()); }

    static QuantParams identity_sentinel() { return QuantParams{}; }

    void validate() const;
};

/// Derives per-tensor params from a clipping range.
///
/// Asymmetric: s = (u-l)/(2^b-1), zp = clip(round(-l/s), code_min, code_max).
/// Symmetric: the range is first symmetrized to (-a, a) with a = max(|l|,|u|);
/// zp is the midpoint code (0 signed, 2^(b-1) unsigned). Rounding is
/// round-half-to-even throughout.
QuantParams make_qparams(const ClipRange& range, int bits, bool is_signed,
                         bool symmetric);

/// Per-channel variant: one range per slice along `axis`.
QuantParams make_qparams_per_channel(const std::vector<ClipRange>& ranges,
                                     int axis, int bits, bool is_signed,
                                     bool symmetric);

/// x_hat = clip(round(x/s) + zp, code_min, code_max), elementwise.
IntTensor quantize(const Tensor& x, const QuantParams& qp);

/// x_tilde = (x_hat - zp) * s, elementwise.
Tensor dequantize(const IntTensor& q, const QuantParams& qp);

/// dequantize(quantize(x)) without materializing the codes; identity when
/// qp.bits == 32.
Tensor fake_quantize(const Tensor& x, const QuantParams& qp);

/// Scalar fake-quant step shared by the tensor paths and by tests.
double fake_quantize_scalar(double x, double scale, int32_t zero_point,
                            int32_t code_min, int32_t code_max);

}  // namespace qy
