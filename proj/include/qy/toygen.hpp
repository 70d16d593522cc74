// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "qy/graph.hpp"

namespace qy {

struct ToyModel {
    GraphModel model;
    WeightBundle weights;
};

/// Seeded detector-style toy network: seven convs with SiLU blocks, one
/// residual add, one nearest upsample, one channel concat, one maxpool, and a
/// 1x1 head conv. Two high-gain thresholded response channels on the last
/// backbone conv give the activations the long one-sided tails low-bit
/// calibration has to cope with; the head reads those channels at low gain.
ToyModel make_toy_model(uint64_t seed);

/// `count` standard-Gaussian [1, c, h, w] tensors from a seeded generator.
std::vector<Tensor> make_gaussian_tensors(uint64_t seed, int count, int c,
                                          int h, int w);

/// Toy input geometry shared by the generator and the bundled datasets.
inline constexpr int kToyChannels = 3;
inline constexpr int kToyHeight = 32;
inline constexpr int kToyWidth = 32;
inline constexpr int kToyCalibCount = 64;
inline constexpr int kToyEvalCount = 16;

}  // namespace qy
