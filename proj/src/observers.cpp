// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/observers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qy/errors.hpp"

namespace qy {

namespace {

ClipRange widen_if_degenerate(double lo, double hi) {
    if (lo == hi) {
        const double d = std::max(std::fabs(lo), 1.0) * 0x1p-20;
        return ClipRange{lo - d, hi + d};
    }
    return ClipRange{lo, hi};
}

void check_nonempty(std::span<const float> values) {
    if (values.empty()) throw EmptyTensor("observer needs a nonempty tensor");
}

// Deterministic strided subsample for large tensors; the offset comes from a
// fixed splitmix64 step so repeated runs see the same elements.
std::vector<float> subsample_for_mse(std::span<const float> values) {
    constexpr size_t kLimit = 1u << 16;
    if (values.size() <= kLimit) {
        return std::vector<float>(values.begin(), values.end());
    }
    const size_t stride = (values.size() + kLimit - 1) / kLimit;
    uint64_t z = 0x9e3779b97f4a7c15ull;
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    const size_t offset = static_cast<size_t>(z % stride);
    std::vector<float> out;
    out.reserve(values.size() / stride + 1);
    for (size_t i = offset; i < values.size(); i += stride) {
        out.push_back(values[i]);
    }
    return out;
}

double mse_against_fake_quant(std::span<const float> values,
                              const QuantParams& qp) {
    const double s = qp.scales[0];
    const int32_t zp = qp.zero_points[0];
    const int32_t cmin = qp.code_min();
    const int32_t cmax = qp.code_max();
    double acc = 0.0;
    for (float v : values) {
        const double d = v - fake_quantize_scalar(v, s, zp, cmin, cmax);
        acc += d * d;
    }
    return acc / static_cast<double>(values.size());
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu_scalar(double x) { return x * sigmoid(x); }

}  // namespace

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::minmax: return "minmax";
        case Scheme::percentile: return "percentile";
        case Scheme::mse: return "mse";
        case Scheme::uh: return "uh";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "minmax") return Scheme::minmax;
    if (name == "percentile") return Scheme::percentile;
    if (name == "mse") return Scheme::mse;
    if (name == "uh") return Scheme::uh;
    throw InvalidConfig("unknown scheme: " + name);
}

void ObserverConfig::validate() const {
    if (percentile_keep <= 0.0 || percentile_keep > 1.0) {
        throw InvalidKeep("percentile keep must be in (0, 1]");
    }
    if (mse_grid_steps < 2) {
        throw InvalidConfig("mse grid needs at least 2 steps");
    }
    if (uh_levels < 1 || uh_start_index < uh_levels ||
        uh_start_index >= 2048) {
        throw InvalidConfig("uh config requires 1 <= levels <= start < 2048");
    }
    if (!std::isfinite(uh_fixed_lower)) {
        throw InvalidConfig("uh fixed lower bound must be finite");
    }
}

ClipRange observe_minmax(std::span<const float> values) {
    check_nonempty(values);
    float lo = values[0];
    float hi = values[0];
    for (float v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return widen_if_degenerate(lo, hi);
}

ClipRange observe_minmax(const Tensor& x) {
    return observe_minmax(std::span<const float>(x.data));
}

ClipRange observe_percentile(std::span<const float> values, double keep) {
    check_nonempty(values);
    if (keep <= 0.0 || keep > 1.0) {
        throw InvalidKeep("keep must be in (0, 1]: got " +
                          std::to_string(keep));
    }
    std::vector<float> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    // keep > 0 guarantees drop < n/2, so the indices stay ordered.
    const size_t drop =
        static_cast<size_t>(std::floor((1.0 - keep) / 2.0 *
                                       static_cast<double>(n)));
    return widen_if_degenerate(sorted[drop], sorted[n - 1 - drop]);
}

ClipRange observe_percentile(const Tensor& x, double keep) {
    return observe_percentile(std::span<const float>(x.data), keep);
}

ClipRange observe_mse(std::span<const float> values, int bits, bool is_signed,
                      bool symmetric, int grid_steps) {
    check_nonempty(values);
    if (grid_steps < 2) {
        throw InvalidConfig("mse grid needs at least 2 steps");
    }
    const ClipRange full = observe_minmax(values);
    const std::vector<float> sample = subsample_for_mse(values);

    ClipRange best = full;
    double best_mse = -1.0;
    // Ascending alpha with <= keeps ties at the larger alpha (less clipping).
    for (int k = 1; k <= grid_steps; ++k) {
        const double alpha = static_cast<double>(k) /
                             static_cast<double>(grid_steps);
        const ClipRange cand =
            widen_if_degenerate(alpha * full.lower, alpha * full.upper);
        const QuantParams qp = make_qparams(cand, bits, is_signed, symmetric);
        const double mse = mse_against_fake_quant(sample, qp);
        if (best_mse < 0.0 || mse <= best_mse) {
            best_mse = mse;
            best = cand;
        }
    }
    return best;
}

ClipRange observe_mse(const Tensor& x, int bits, bool is_signed,
                      bool symmetric, int grid_steps) {
    return observe_mse(std::span<const float>(x.data), bits, is_signed,
                       symmetric, grid_steps);
}

double silu_min() {
    // Dense scan, then ternary-search refinement around the best cell.
    double best_x = 0.0;
    double best_v = 0.0;
    const double step = 1e-3;
    for (double x = -10.0; x <= 0.0; x += step) {
        const double v = silu_scalar(x);
        if (v < best_v) {
            best_v = v;
            best_x = x;
        }
    }
    double lo = best_x - 2.0 * step;
    double hi = best_x + 2.0 * step;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (silu_scalar(m1) < silu_scalar(m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    return silu_scalar(0.5 * (lo + hi));
}

}  // namespace qy
