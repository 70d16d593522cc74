// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qy/quant.hpp"
#include "qy/tensor.hpp"

namespace qy {

/// Fixed 2048-bin count vector over [domain_lower, domain_upper).
///
/// During accumulation, values below domain_lower increment only clamped_low
/// (bin 0 is untouched) so that sum(counts) + clamped_low == total holds at
/// all times; finalized() folds clamped_low into bin 0 before a search.
/// Values >= domain_upper land in bin 2047.
struct ActivationHistogram {
    static constexpr int kBins = 2048;

    double domain_lower = 0.0;
    double domain_upper = 0.0;
    std::vector<uint64_t> counts;
    uint64_t clamped_low = 0;
    uint64_t total = 0;

    double bin_width() const {
        return (domain_upper - domain_lower) / static_cast<double>(kBins);
    }

    void add(std::span<const float> values);
    void add(const Tensor& t) { add(std::span<const float>(t.data)); }

    /// Bin-wise addition of a partial histogram over the same domain, for
    /// sharded sample streams.
    void merge(const ActivationHistogram& other);

    /// Copy with clamped_low folded into bin 0.
    ActivationHistogram finalized() const;

    void validate() const;
};

/// Empty histogram over the given domain; throws InvalidDomain if the domain
/// is not a valid range.
ActivationHistogram make_histogram(double domain_lower, double domain_upper);

/// Fills a histogram from a sample stream. Needs at least one sample.
ActivationHistogram build_histogram(const std::vector<Tensor>& samples,
                                    const ClipRange& domain);

}  // namespace qy
