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

#ifndef REXNET_TENSOR_HPP
#define REXNET_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rexnet {

/// Dense NCHW tensor in double precision. The gradient buffer shares the
/// shape of `data` and is allocated lazily by ensure_grad().
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;
    std::vector<double> grad;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
    }
    double& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    double at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    double* plane(int in, int ic) { return data.data() + index(in, ic, 0, 0); }
    const double* plane(int in, int ic) const { return data.data() + index(in, ic, 0, 0); }
    double* grad_plane(int in, int ic) { return grad.data() + index(in, ic, 0, 0); }
    const double* grad_plane(int in, int ic) const { return grad.data() + index(in, ic, 0, 0); }

    void ensure_grad();
    void zero_grad();

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    bool all_finite() const;
    std::string shape_str() const;
};

/// Binary tensor blob: magic "RXT1", little-endian u32 rank, u32 dims,
/// raw little-endian f64 payload.
void write_rxt(const std::string& path, const std::vector<std::uint32_t>& dims,
               const double* values, std::size_t count);
void read_rxt(const std::string& path, std::vector<std::uint32_t>& dims,
              std::vector<double>& values);

void write_rxt(const std::string& path, const Tensor& t);
Tensor read_rxt_tensor(const std::string& path);

}  // namespace rexnet

#endif  // REXNET_TENSOR_HPP
