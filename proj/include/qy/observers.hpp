// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

#include "qy/quant.hpp"
#include "qy/tensor.hpp"

namespace qy {

enum class Scheme { minmax, percentile, mse, uh };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

/// Range-selection configuration. Defaults follow the reference method:
/// 2048-bin histogram, lower truncation fixed at -0.2785 (the SiLU global
/// minimum region), 128 merge levels, search start index 128.
struct ObserverConfig {
    Scheme scheme = Scheme::uh;
    double percentile_keep = 0.9999;
    int mse_grid_steps = 100;
    double uh_fixed_lower = -0.2785;
    int uh_levels = 128;
    int uh_start_index = 128;

    void validate() const;
};

/// (min(x), max(x)); a degenerate min == max range is widened symmetrically
/// by max(|v|, 1) * 2^-20 so the resulting grid has positive scale.
ClipRange observe_minmax(const Tensor& x);
ClipRange observe_minmax(std::span<const float> values);

/// Empirical quantiles at (1-keep)/2 and 1-(1-keep)/2 by nearest rank over a
/// sorted copy; keep == 1 degenerates to MinMax.
ClipRange observe_percentile(const Tensor& x, double keep);
ClipRange observe_percentile(std::span<const float> values, double keep);

/// Grid search over candidate ranges (a*min, a*max), a in {1/G, ..., 1},
/// minimizing MSE(x, fake_quantize(x)). Ties break toward larger a. Tensors
/// above 2^16 elements are evaluated on a fixed-seed strided subsample.
ClipRange observe_mse(const Tensor& x, int bits, bool is_signed,
                      bool symmetric, int grid_steps);
ClipRange observe_mse(std::span<const float> values, int bits, bool is_signed,
                      bool symmetric, int grid_steps);

/// Global minimum of x*sigmoid(x), by dense scan plus local refinement over
/// [-10, 0]. Validates the -0.2785 truncation constant from first principles.
double silu_min();

}  // namespace qy
