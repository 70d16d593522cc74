// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/histogram.hpp"

#include <cmath>

#include "qy/errors.hpp"

namespace qy {

void ActivationHistogram::add(std::span<const float> values) {
    const double lo = domain_lower;
    const double w = bin_width();
    for (float v : values) {
        ++total;
        if (v < lo) {
            ++clamped_low;
            continue;
        }
        int64_t idx = static_cast<int64_t>(std::floor((v - lo) / w));
        if (idx >= kBins) idx = kBins - 1;
        if (idx < 0) idx = 0;
        ++counts[static_cast<size_t>(idx)];
    }
}

void ActivationHistogram::merge(const ActivationHistogram& other) {
    if (other.domain_lower != domain_lower ||
        other.domain_upper != domain_upper) {
        throw InvalidDomain("cannot merge histograms over different domains");
    }
    for (int i = 0; i < kBins; ++i) {
        counts[static_cast<size_t>(i)] += other.counts[static_cast<size_t>(i)];
    }
    clamped_low += other.clamped_low;
    total += other.total;
}

ActivationHistogram ActivationHistogram::finalized() const {
    ActivationHistogram out = *this;
    out.counts[0] += out.clamped_low;
    out.clamped_low = 0;
    return out;
}

void ActivationHistogram::validate() const {
    if (!(domain_upper > domain_lower) || !std::isfinite(domain_lower) ||
        !std::isfinite(domain_upper)) {
        throw InvalidDomain("histogram domain must be a finite range");
    }
    if (counts.size() != kBins) {
        throw InvalidDomain("histogram must carry exactly 2048 bins");
    }
    uint64_t sum = clamped_low;
    for (uint64_t c : counts) sum += c;
    if (sum != total) {
        throw InvalidDomain("histogram mass accounting is inconsistent");
    }
}

ActivationHistogram make_histogram(double domain_lower, double domain_upper) {
    if (!(domain_upper > domain_lower) || !std::isfinite(domain_lower) ||
        !std::isfinite(domain_upper)) {
        throw InvalidDomain("histogram domain must be a finite range");
    }
    ActivationHistogram h;
    h.domain_lower = domain_lower;
    h.domain_upper = domain_upper;
    h.counts.assign(ActivationHistogram::kBins, 0);
    return h;
}

ActivationHistogram build_histogram(const std::vector<Tensor>& samples,
                                    const ClipRange& domain) {
    domain.validate();
    if (samples.empty()) {
        throw EmptyCalibrationSet("histogram needs at least one sample");
    }
    ActivationHistogram h = make_histogram(domain.lower, domain.upper);
    for (const Tensor& t : samples) h.add(t);
    return h;
}

}  // namespace qy
