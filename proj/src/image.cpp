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

#include "rexnet/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace rexnet {

namespace {
int padded_extent(int v, int multiple) {
    return ((v + multiple - 1) / multiple) * multiple;
}
}  // namespace

Plane pad_replicate(const Plane& p, int multiple) {
    const int nh = padded_extent(p.h, multiple);
    const int nw = padded_extent(p.w, multiple);
    if (nh == p.h && nw == p.w) return p;
    Plane out(nh, nw);
    for (int y = 0; y < nh; ++y) {
        const int sy = std::min(y, p.h - 1);
        for (int x = 0; x < nw; ++x) out.at(y, x) = p.at(sy, std::min(x, p.w - 1));
    }
    return out;
}

ColorImage pad_replicate(const ColorImage& img, int multiple) {
    const int nh = padded_extent(img.h, multiple);
    const int nw = padded_extent(img.w, multiple);
    if (nh == img.h && nw == img.w) return img;
    ColorImage out(nh, nw);
    for (int y = 0; y < nh; ++y) {
        const int sy = std::min(y, img.h - 1);
        for (int x = 0; x < nw; ++x) {
            const int sx = std::min(x, img.w - 1);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return out;
}

Plane crop(const Plane& p, int h, int w) {
    if (h > p.h || w > p.w) throw std::invalid_argument("crop larger than source plane");
    if (h == p.h && w == p.w) return p;
    Plane out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(y, x) = p.at(y, x);
    }
    return out;
}

double plane_min(const Plane& p) { return *std::min_element(p.v.begin(), p.v.end()); }
double plane_max(const Plane& p) { return *std::max_element(p.v.begin(), p.v.end()); }

double plane_mean(const Plane& p) {
    double acc = 0.0;
    for (double v : p.v) acc += v;
    return acc / static_cast<double>(p.v.size());
}

double plane_variance(const Plane& p) {
    const double m = plane_mean(p);
    double acc = 0.0;
    for (double v : p.v) acc += (v - m) * (v - m);
    return acc / static_cast<double>(p.v.size());
}

}  // namespace rexnet
