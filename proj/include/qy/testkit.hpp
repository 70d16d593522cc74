// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "qy/histogram.hpp"
#include "qy/quant.hpp"
#include "qy/tensor.hpp"

// Brute-force reference implementations used to validate the main code
// paths. Intentionally naive and independent: no helper is shared with the
// module under test.
namespace qy::testkit {

/// Literal transcription of the unilateral histogram search; returns the
/// winning truncation index. Must agree exactly with uh_search.
int oracle_uh(const ActivationHistogram& hist, int levels, int start_index);

/// Exhaustively evaluates true fake-quant MSE for every candidate range and
/// returns the argmin (first on ties, matching larger-alpha preference when
/// candidates are ordered by growing alpha).
ClipRange oracle_best_range(const Tensor& x, int bits, bool is_signed,
                            bool symmetric,
                            const std::vector<ClipRange>& candidates);

/// Direct six-nested-loop convolution with a double accumulator.
Tensor oracle_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                   int stride, int padding);

enum class DistKind { gaussian, uniform, silu_gaussian, long_tail };

struct SyntheticDistribution {
    DistKind kind = DistKind::gaussian;
    double mu = 0.0;
    double sigma = 1.0;
    int degrees_of_freedom = 3;  // long_tail
    int count = 0;
    uint64_t seed = 0;
};

/// Deterministic sample stream for a synthetic distribution.
std::vector<float> generate(const SyntheticDistribution& dist);

}  // namespace qy::testkit
