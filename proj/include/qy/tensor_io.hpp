// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qy/tensor.hpp"

namespace qy {

// QYT1 tensor container: magic "QYT1", u8 rank, rank x u32 little-endian
// dims, then raw little-endian IEEE-754 binary32 values, row-major.

void write_qyt(std::ostream& os, const Tensor& t);
Tensor read_qyt(std::istream& is);

void save_qyt(const std::string& path, const Tensor& t);
Tensor load_qyt(const std::string& path);

/// Sorted list of the "*.qyt" files directly inside `dir` (lexicographic,
/// the order calibration consumes them in).
std::vector<std::string> list_qyt_files(const std::string& dir);

/// Loads every tensor listed by list_qyt_files, at most `limit` when
/// limit > 0.
std::vector<Tensor> load_qyt_dir(const std::string& dir, int limit = 0);

}  // namespace qy
