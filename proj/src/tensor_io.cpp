// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "qy/errors.hpp"

namespace qy {

namespace {

static_assert(std::endian::native == std::endian::little,
              "QYT1 I/O assumes a little-endian host");

constexpr char kMagic[4] = {'Q', 'Y', 'T', '1'};

void write_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw IoError("short write while emitting QYT1 data");
}

void read_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n) {
        throw IoError("truncated QYT1 stream");
    }
}

}  // namespace

void write_qyt(std::ostream& os, const Tensor& t) {
    check_finite(t, "write_qyt");
    if (t.rank() < 1 || t.rank() > 255) {
        throw IoError("QYT1 rank must be in [1, 255]");
    }
    write_bytes(os, kMagic, 4);
    const uint8_t rank = static_cast<uint8_t>(t.rank());
    write_bytes(os, &rank, 1);
    for (int64_t d : t.shape) {
        if (d <= 0 || d > 0xffffffffll) {
            throw IoError("QYT1 dimension out of u32 range");
        }
        const uint32_t d32 = static_cast<uint32_t>(d);
        write_bytes(os, &d32, 4);
    }
    if (!t.data.empty()) {
        write_bytes(os, t.data.data(), t.data.size() * sizeof(float));
    }
}

Tensor read_qyt(std::istream& is) {
    char magic[4];
    read_bytes(is, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("bad QYT1 magic");
    }
    uint8_t rank = 0;
    read_bytes(is, &rank, 1);
    if (rank == 0) throw IoError("QYT1 rank must be >= 1");
    std::vector<int64_t> shape(rank);
    for (int i = 0; i < rank; ++i) {
        uint32_t d = 0;
        read_bytes(is, &d, 4);
        if (d == 0) throw IoError("QYT1 dimension must be positive");
        shape[static_cast<size_t>(i)] = d;
    }
    const int64_t n = shape_numel(shape);
    Tensor t;
    t.shape = std::move(shape);
    t.data.resize(static_cast<size_t>(n));
    read_bytes(is, t.data.data(), t.data.size() * sizeof(float));
    check_finite(t, "read_qyt");
    return t;
}

void save_qyt(const std::string& path, const Tensor& t) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open for write: " + tmp);
        write_qyt(os, t);
        if (!os.flush()) throw IoError("flush failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path + ": " + ec.message());
}

Tensor load_qyt(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    return read_qyt(is);
}

std::vector<std::string> list_qyt_files(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw IoError("not a directory: " + dir);
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".qyt") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<Tensor> load_qyt_dir(const std::string& dir, int limit) {
    std::vector<std::string> files = list_qyt_files(dir);
    if (limit > 0 && static_cast<int>(files.size()) > limit) {
        files.resize(static_cast<size_t>(limit));
    }
    std::vector<Tensor> out;
    out.reserve(files.size());
    for (const std::string& f : files) out.push_back(load_qyt(f));
    return out;
}

}  // namespace qy
