// Copyright (c) 2026 The RexNet Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rexnet/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rexnet {

Tensor::Tensor(int n_, int c_, int h_, int w_, double fill)
    : n(n_), c(c_), h(h_), w(w_) {
    if (n < 0 || c < 0 || h < 0 || w < 0) {
        throw std::invalid_argument("tensor dims must be non-negative");
    }
    data.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) {
        grad.assign(data.size(), 0.0);
    }
}

void Tensor::zero_grad() {
    if (grad.empty()) {
        ensure_grad();
    } else {
        std::fill(grad.begin(), grad.end(), 0.0);
    }
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
}

namespace {

void put_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void write_rxt(const std::string& path, const std::vector<std::uint32_t>& dims,
               const double* values, std::size_t count) {
    std::size_t expect = 1;
    for (std::uint32_t d : dims) expect *= d;
    if (expect != count) {
        throw std::invalid_argument("rxt payload size does not match dims");
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write("RXT1", 4);
    put_u32_le(os, static_cast<std::uint32_t>(dims.size()));
    for (std::uint32_t d : dims) put_u32_le(os, d);
    for (std::size_t i = 0; i < count; ++i) put_f64_le(os, values[i]);
    if (!os) throw std::runtime_error("short write: " + path);
}

void read_rxt(const std::string& path, std::vector<std::uint32_t>& dims,
              std::vector<double>& values) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RXT1", 4) != 0) {
        throw std::runtime_error("not an RXT1 file: " + path);
    }
    std::uint32_t rank = get_u32_le(is);
    if (rank > 8) throw std::runtime_error("rxt rank too large: " + path);
    dims.assign(rank, 0);
    std::size_t count = 1;
    for (std::uint32_t& d : dims) {
        d = get_u32_le(is);
        count *= d;
    }
    values.assign(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) values[i] = get_f64_le(is);
    if (!is) throw std::runtime_error("truncated RXT1 file: " + path);
}

void write_rxt(const std::string& path, const Tensor& t) {
    write_rxt(path,
              {static_cast<std::uint32_t>(t.n), static_cast<std::uint32_t>(t.c),
               static_cast<std::uint32_t>(t.h), static_cast<std::uint32_t>(t.w)},
              t.data.data(), t.data.size());
}

Tensor read_rxt_tensor(const std::string& path) {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
    read_rxt(path, dims, values);
    if (dims.size() != 4) throw std::runtime_error("expected rank-4 tensor: " + path);
    Tensor t(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
             static_cast<int>(dims[2]), static_cast<int>(dims[3]));
    t.data = std::move(values);
    return t;
}

}  // namespace rexnet
