// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace qy {

int64_t shape_numel(const std::vector<int64_t>& shape);

/// Dense n-dimensional array of 32-bit reals, row-major.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<int64_t> shape_, std::vector<float> data_);

    static Tensor zeros(std::vector<int64_t> shape_);
    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    bool empty() const { return data.empty(); }
};

/// Quantized integer codes with the same layout rules as Tensor.
struct IntTensor {
    std::vector<int64_t> shape;
    std::vector<int32_t> data;

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
};

/// Throws NonFiniteValue if any element is NaN or infinite. Used at API
/// boundaries (file I/O, graph execution entry), not inside hot loops.
void check_finite(const Tensor& t, const char* context);

}  // namespace qy
