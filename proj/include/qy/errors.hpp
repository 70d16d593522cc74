// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qy {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define QY_DEFINE_ERROR(name)                      \
    class name : public Error {                    \
    public:                                        \
        using Error::Error;                        \
    }

QY_DEFINE_ERROR(ShapeMismatch);
QY_DEFINE_ERROR(NonPositiveRange);
QY_DEFINE_ERROR(DegenerateRange);
QY_DEFINE_ERROR(EmptyTensor);
QY_DEFINE_ERROR(InvalidKeep);
QY_DEFINE_ERROR(InvalidDomain);
QY_DEFINE_ERROR(DegenerateHistogram);
QY_DEFINE_ERROR(CyclicGraph);
QY_DEFINE_ERROR(MissingWeight);
QY_DEFINE_ERROR(InvalidConfig);
QY_DEFINE_ERROR(NonFiniteValue);
QY_DEFINE_ERROR(EmptyCalibrationSet);
QY_DEFINE_ERROR(IoError);

#undef QY_DEFINE_ERROR

}  // namespace qy
