// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qy/errors.hpp"

namespace qy {

namespace {

// nearbyint under the default rounding mode is round-half-to-even, the tie
// rule fixed by the design decisions for cross-platform determinism.
inline double round_half_even(double v) { return std::nearbyint(v); }

void check_bits(int bits) {
    if (bits < 2 || bits > 8) {
        throw InvalidConfig("bits must be in [2, 8] (32 is the identity "
                            "sentinel and has no grid): got " +
                            std::to_string(bits));
    }
}

struct AxisSplit {
    int64_t outer = 1;
    int64_t channels = 1;
    int64_t inner = 1;
};

AxisSplit split_for_axis(const std::vector<int64_t>& shape, int axis) {
    if (axis < 0 || axis >= static_cast<int>(shape.size())) {
        throw ShapeMismatch("per-channel axis " + std::to_string(axis) +
                            " exceeds tensor rank " +
                            std::to_string(shape.size()));
    }
    AxisSplit s;
    for (int i = 0; i < axis; ++i) s.outer *= shape[i];
    s.channels = shape[axis];
    for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

void check_channel_count(const QuantParams& qp, int64_t channels) {
    if (static_cast<int64_t>(qp.scales.size()) != channels) {
        throw ShapeMismatch("per-channel params carry " +
                            std::to_string(qp.scales.size()) +
                            " channels, tensor has " +
                            std::to_string(channels));
    }
}

inline int32_t quantize_scalar(double x, double s, int32_t zp, double cmin,
                               double cmax) {
    double r = round_half_even(x / s) + static_cast<double>(zp);
    r = std::min(cmax, std::max(cmin, r));
    return static_cast<int32_t>(r);
}

QuantParams make_single(double lower, double upper, int bits, bool is_signed,
                        bool symmetric) {
    QuantParams qp;
    qp.bits = bits;
    qp.is_signed = is_signed;
    qp.symmetric = symmetric;
    const double levels = static_cast<double>((1 << bits) - 1);
    if (symmetric) {
        const double a = std::max(std::fabs(lower), std::fabs(upper));
        qp.scales.push_back(2.0 * a / levels);
        qp.zero_points.push_back(is_signed ? 0 : (1 << (bits - 1)));
    } else {
        const double s = (upper - lower) / levels;
        // zp from the unrounded ratio, not -lower/s: the ratio is Eq.(4) in
        // exact arithmetic and keeps half-way cases (e.g. 127.5) exact.
        double zp = round_half_even(-lower * levels / (upper - lower));
        QuantParams probe;
        probe.bits = bits;
        probe.is_signed = is_signed;
        zp = std::min(static_cast<double>(probe.code_max()),
                      std::max(static_cast<double>(probe.code_min()), zp));
        qp.scales.push_back(s);
        qp.zero_points.push_back(static_cast<int32_t>(zp));
    }
    return qp;
}

}  // namespace

void ClipRange::validate() const {
    if (!std::isfinite(lower) || !std::isfinite(upper)) {
        throw NonPositiveRange("clip range bounds must be finite");
    }
    if (upper <= lower) {
        throw NonPositiveRange("clip range upper must exceed lower: [" +
                               std::to_string(lower) + ", " +
                               std::to_string(upper) + "]");
    }
}

void QuantParams::validate() const {
    if (identity()) return;
    check_bits(bits);
    if (scales.empty() || scales.size() != zero_points.size()) {
        throw InvalidConfig("quant params must carry matching scale/zero-point "
                            "arrays");
    }
    for (double s : scales) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw InvalidConfig("scale must be positive and finite");
        }
    }
    for (int32_t zp : zero_points) {
        if (zp < code_min() || zp > code_max()) {
            throw InvalidConfig("zero point outside code range");
        }
        if (symmetric && is_signed && zp != 0) {
            throw InvalidConfig("symmetric signed params require zp == 0");
        }
    }
}

QuantParams make_qparams(const ClipRange& range, int bits, bool is_signed,
                         bool symmetric) {
    range.validate();
    check_bits(bits);
    if (static_cast<float>(range.upper - range.lower) == 0.0f) {
        throw DegenerateRange("clip range collapses to zero width in 32-bit "
                              "arithmetic");
    }
    QuantParams qp = make_single(range.lower, range.upper, bits, is_signed,
                                 symmetric);
    qp.validate();
    return qp;
}

QuantParams make_qparams_per_channel(const std::vector<ClipRange>& ranges,
                                     int axis, int bits, bool is_signed,
                                     bool symmetric) {
    if (ranges.empty()) throw InvalidConfig("no per-channel ranges given");
    check_bits(bits);
    QuantParams qp;
    qp.bits = bits;
    qp.is_signed = is_signed;
    qp.symmetric = symmetric;
    qp.granularity = Granularity::per_channel;
    qp.axis = axis;
    for (const ClipRange& r : ranges) {
        r.validate();
        if (static_cast<float>(r.upper - r.lower) == 0.0f) {
            throw DegenerateRange("per-channel range collapses to zero width");
        }
        QuantParams one = make_single(r.lower, r.upper, bits, is_signed,
                                      symmetric);
        qp.scales.push_back(one.scales[0]);
        qp.zero_points.push_back(one.zero_points[0]);
    }
    qp.validate();
    return qp;
}

IntTensor quantize(const Tensor& x, const QuantParams& qp) {
    qp.validate();
    if (qp.identity()) {
        throw InvalidConfig("quantize has no grid for the bits=32 sentinel");
    }
    IntTensor out;
    out.shape = x.shape;
    out.data.resize(x.data.size());
    const double cmin = qp.code_min();
    const double cmax = qp.code_max();
    if (qp.granularity == Granularity::per_tensor) {
        const double s = qp.scales[0];
        const int32_t zp = qp.zero_points[0];
        for (size_t i = 0; i < x.data.size(); ++i) {
            out.data[i] = quantize_scalar(x.data[i], s, zp, cmin, cmax);
        }
        return out;
    }
    const AxisSplit sp = split_for_axis(x.shape, qp.axis);
    check_channel_count(qp, sp.channels);
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t c = 0; c < sp.channels; ++c) {
            const double s = qp.scales[static_cast<size_t>(c)];
            const int32_t zp = qp.zero_points[static_cast<size_t>(c)];
            const int64_t base = (o * sp.channels + c) * sp.inner;
            for (int64_t i = 0; i < sp.inner; ++i) {
                out.data[static_cast<size_t>(base + i)] = quantize_scalar(
                    x.data[static_cast<size_t>(base + i)], s, zp, cmin, cmax);
            }
        }
    }
    return out;
}

Tensor dequantize(const IntTensor& q, const QuantParams& qp) {
    qp.validate();
    if (qp.identity()) {
        throw InvalidConfig("dequantize has no grid for the bits=32 sentinel");
    }
    Tensor out;
    out.shape = q.shape;
    out.data.resize(q.data.size());
    if (qp.granularity == Granularity::per_tensor) {
        const double s = qp.scales[0];
        const int32_t zp = qp.zero_points[0];
        for (size_t i = 0; i < q.data.size(); ++i) {
            out.data[i] = static_cast<float>((q.data[i] - zp) * s);
        }
        return out;
    }
    const AxisSplit sp = split_for_axis(q.shape, qp.axis);
    check_channel_count(qp, sp.channels);
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t c = 0; c < sp.channels; ++c) {
            const double s = qp.scales[static_cast<size_t>(c)];
            const int32_t zp = qp.zero_points[static_cast<size_t>(c)];
            const int64_t base = (o * sp.channels + c) * sp.inner;
            for (int64_t i = 0; i < sp.inner; ++i) {
                out.data[static_cast<size_t>(base + i)] = static_cast<float>(
                    (q.data[static_cast<size_t>(base + i)] - zp) * s);
            }
        }
    }
    return out;
}

double fake_quantize_scalar(double x, double scale, int32_t zero_point,
                            int32_t code_min, int32_t code_max) {
    double r = round_half_even(x / scale) + static_cast<double>(zero_point);
    r = std::min(static_cast<double>(code_max),
                 std::max(static_cast<double>(code_min), r));
    return (r - static_cast<double>(zero_point)) * scale;
}

Tensor fake_quantize(const Tensor& x, const QuantParams& qp) {
    qp.validate();
    if (qp.identity()) return x;
    Tensor out;
    out.shape = x.shape;
    out.data.resize(x.data.size());
    if (qp.granularity == Granularity::per_tensor) {
        const double s = qp.scales[0];
        const int32_t zp = qp.zero_points[0];
        const int32_t cmin = qp.code_min();
        const int32_t cmax = qp.code_max();
        for (size_t i = 0; i < x.data.size(); ++i) {
            out.data[i] = static_cast<float>(
                fake_quantize_scalar(x.data[i], s, zp, cmin, cmax));
        }
        return out;
    }
    const AxisSplit sp = split_for_axis(x.shape, qp.axis);
    check_channel_count(qp, sp.channels);
    const int32_t cmin = qp.code_min();
    const int32_t cmax = qp.code_max();
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t c = 0; c < sp.channels; ++c) {
            const double s = qp.scales[static_cast<size_t>(c)];
            const int32_t zp = qp.zero_points[static_cast<size_t>(c)];
            const int64_t base = (o * sp.channels + c) * sp.inner;
            for (int64_t i = 0; i < sp.inner; ++i) {
                out.data[static_cast<size_t>(base + i)] =
                    static_cast<float>(fake_quantize_scalar(
                        x.data[static_cast<size_t>(base + i)], s, zp, cmin,
                        cmax));
            }
        }
    }
    return out;
}

}  // namespace qy
