// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/uh.hpp"

#include <limits>

#include "qy/errors.hpp"

namespace qy {

std::vector<uint64_t> uh_merge(std::span<const uint64_t> prefix, int levels) {
    const int64_t n = static_cast<int64_t>(prefix.size());
    std::vector<uint64_t> groups(static_cast<size_t>(levels), 0);
    for (int64_t j = 0; j < levels; ++j) {
        const int64_t a = j * n / levels;
        const int64_t b = (j + 1) * n / levels;
        uint64_t sum = 0;
        for (int64_t k = a; k < b; ++k) sum += prefix[static_cast<size_t>(k)];
        groups[static_cast<size_t>(j)] = sum;
    }
    return groups;
}

std::vector<double> uh_expand(std::span<const uint64_t> prefix,
                              std::span<const uint64_t> merged, int levels) {
    const int64_t n = static_cast<int64_t>(prefix.size());
    std::vector<double> expanded(prefix.size(), 0.0);
    for (int64_t j = 0; j < levels; ++j) {
        const int64_t a = j * n / levels;
        const int64_t b = (j + 1) * n / levels;
        int64_t nonzero = 0;
        for (int64_t k = a; k < b; ++k) {
            if (prefix[static_cast<size_t>(k)] != 0) ++nonzero;
        }
        if (nonzero == 0) continue;
        const double share = static_cast<double>(merged[static_cast<size_t>(j)]) /
                             static_cast<double>(nonzero);
        for (int64_t k = a; k < b; ++k) {
            if (prefix[static_cast<size_t>(k)] != 0) {
                expanded[static_cast<size_t>(k)] = share;
            }
        }
    }
    return expanded;
}

UhSearchTrace uh_search(const ActivationHistogram& hist,
                        const ObserverConfig& cfg) {
    hist.validate();
    cfg.validate();
    if (hist.total == 0) {
        throw DegenerateHistogram("histogram holds no observations");
    }
    const ActivationHistogram h = hist.finalized();
    const int bins = ActivationHistogram::kBins;
    const int start = cfg.uh_start_index;
    const int levels = cfg.uh_levels;

    // Suffix sums give each candidate's outlier count in O(1); integer math,
    // so the reference distribution's mass stays exact.
    std::vector<uint64_t> suffix(static_cast<size_t>(bins) + 1, 0);
    for (int i = bins - 1; i >= 0; --i) {
        suffix[static_cast<size_t>(i)] =
            suffix[static_cast<size_t>(i) + 1] + h.counts[static_cast<size_t>(i)];
    }

    UhSearchTrace trace;
    trace.start_index = start;
    trace.mse_by_index.reserve(static_cast<size_t>(bins - start));
    int best_i = -1;
    double best_mse = std::numeric_limits<double>::infinity();

    for (int i = start; i < bins; ++i) {
        const std::span<const uint64_t> prefix(h.counts.data(),
                                               static_cast<size_t>(i));
        const uint64_t outliers = suffix[static_cast<size_t>(i)];

        // Reference distribution P: kept prefix with the clipped mass folded
        // into the last kept bin.
        double p_sum = 0.0;
        for (int j = 0; j < i; ++j) {
            double pj = static_cast<double>(prefix[static_cast<size_t>(j)]);
            if (j == i - 1) pj += static_cast<double>(outliers);
            p_sum += pj;
        }

        double mse;
        if (p_sum == 0.0) {
            mse = std::numeric_limits<double>::infinity();
        } else {
            const std::vector<uint64_t> merged = uh_merge(prefix, levels);
            const std::vector<double> expanded =
                uh_expand(prefix, merged, levels);
            double q_sum = 0.0;
            for (int j = 0; j < i; ++j) {
                q_sum += expanded[static_cast<size_t>(j)];
            }
            double acc = 0.0;
            for (int j = 0; j < i; ++j) {
                double pj = static_cast<double>(prefix[static_cast<size_t>(j)]);
                if (j == i - 1) pj += static_cast<double>(outliers);
                const double p = pj / p_sum;
                const double q = q_sum > 0.0
                                     ? expanded[static_cast<size_t>(j)] / q_sum
                                     : 0.0;
                const double d = p - q;
                acc += d * d;
            }
            mse = acc / static_cast<double>(i);
        }
        trace.mse_by_index.push_back(mse);
        if (mse < best_mse) {
            best_mse = mse;
            best_i = i;
        }
    }

    trace.best_index = best_i;
    trace.best_upper =
        h.domain_lower + static_cast<double>(best_i) * h.bin_width();
    return trace;
}

ClipRange observe_uh(const std::vector<Tensor>& samples,
                     const ObserverConfig& cfg, double observed_max) {
    cfg.validate();
    if (!(observed_max > cfg.uh_fixed_lower)) {
        throw InvalidDomain("observed max must exceed the fixed lower bound");
    }
    const ActivationHistogram hist = build_histogram(
        samples, ClipRange{cfg.uh_fixed_lower, observed_max});
    const UhSearchTrace trace = uh_search(hist, cfg);
    return ClipRange{cfg.uh_fixed_lower, trace.best_upper};
}

}  // namespace qy
