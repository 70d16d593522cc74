// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/tensor.hpp"

#include <cmath>
#include <string>

#include "qy/errors.hpp"

namespace qy {

int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d <= 0) throw ShapeMismatch("non-positive dimension in shape");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int64_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
        throw ShapeMismatch("tensor data length does not match shape");
    }
}

Tensor Tensor::zeros(std::vector<int64_t> shape_) {
    int64_t n = shape_numel(shape_);
    Tensor t;
    t.shape = std::move(shape_);
    t.data.assign(static_cast<size_t>(n), 0.0f);
    return t;
}

void check_finite(const Tensor& t, const char* context) {
    for (float v : t.data) {
        if (!std::isfinite(v)) {
            throw NonFiniteValue(std::string(context) +
                                 ": tensor contains NaN or Inf");
        }
    }
}

}  // namespace qy
