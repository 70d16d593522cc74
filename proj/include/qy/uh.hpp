// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qy/histogram.hpp"
#include "qy/observers.hpp"

namespace qy {

/// Search record of the unilateral histogram calibration: one distribution
/// MSE per candidate truncation index, plus the winning index and the upper
/// bound it implies.
struct UhSearchTrace {
    int start_index = 128;
    std::vector<double> mse_by_index;  // entry k is MSE[start_index + k]
    int best_index = 0;
    double best_upper = 0.0;

    double mse_at(int index) const {
        return mse_by_index[static_cast<size_t>(index - start_index)];
    }
};

/// Merges prefix[0:i] into `levels` groups; group j covers bins
/// [floor(j*i/L), floor((j+1)*i/L)). Exposed for the mass-conservation
/// property tests.
std::vector<uint64_t> uh_merge(std::span<const uint64_t> prefix, int levels);

/// Expands merged groups back to prefix.size() bins: each group's total is
/// split equally over its originally-nonzero member bins; all-zero groups
/// stay zero.
std::vector<double> uh_expand(std::span<const uint64_t> prefix,
                              std::span<const uint64_t> merged, int levels);

/// Runs the truncation search over a (possibly unfinalized) histogram.
/// For each candidate i the kept prefix plus the outlier lump forms the
/// reference distribution P; the merged/expanded prefix forms Q; MSE[i] is
/// their mean squared difference. Ties break toward smaller i.
UhSearchTrace uh_search(const ActivationHistogram& hist,
                        const ObserverConfig& cfg);

/// Two-step convenience observer: histogram over
/// (cfg.uh_fixed_lower, observed_max), then uh_search. The returned range
/// always has lower == cfg.uh_fixed_lower.
ClipRange observe_uh(const std::vector<Tensor>& samples,
                     const ObserverConfig& cfg, double observed_max);

}  // namespace qy
