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

#ifndef REXNET_IMAGE_HPP
#define REXNET_IMAGE_HPP

#include <cstdint>
#include <vector>

namespace rexnet {

/// Single-channel H×W grid of doubles. Saliency maps, depth planes and
/// edge-probability maps are all planes; value conventions live with the
/// producing module.
struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;

    Plane() = default;
    Plane(int h_, int w_, double fill = 0.0)
        : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, fill) {}

    double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
    std::size_t size() const { return v.size(); }
};

/// RGB image, channel-interleaved, values in [0,1].
struct ColorImage {
    int h = 0, w = 0;
    std::vector<double> rgb;

    ColorImage() = default;
    ColorImage(int h_, int w_) : h(h_), w(w_), rgb(static_cast<std::size_t>(h_) * w_ * 3, 0.0) {}

    double& at(int y, int x, int ch) { return rgb[(static_cast<std::size_t>(y) * w + x) * 3 + ch]; }
    double at(int y, int x, int ch) const {
        return rgb[(static_cast<std::size_t>(y) * w + x) * 3 + ch];
    }
};

Plane pad_replicate(const Plane& p, int multiple);
ColorImage pad_replicate(const ColorImage& img, int multiple);
Plane crop(const Plane& p, int h, int w);

double plane_min(const Plane& p);
double plane_max(const Plane& p);
double plane_mean(const Plane& p);
double plane_variance(const Plane& p);

}  // namespace rexnet

#endif  // REXNET_IMAGE_HPP
