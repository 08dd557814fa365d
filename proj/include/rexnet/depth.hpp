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

#ifndef REXNET_DEPTH_HPP
#define REXNET_DEPTH_HPP

#include "rexnet/image.hpp"
#include "rexnet/region.hpp"

namespace rexnet {

/// Rescales raw depth counts so nearer pixels carry larger intensity:
/// D = (max - raw) / (max - min). Zero counts are treated as invalid and
/// filled from the nearest valid pixel first; a constant plane maps to
/// all 0.5 so the position prior stays neutral.
Plane transform_depth(const Plane& raw);

/// S1 = S0 * 1/(1+exp(-sigma*D)), per pixel.
Plane position_prior(const Plane& s0, const Plane& depth, double sigma);

/// Region-level smoothing: each region's saliency becomes the weighted
/// mean of its boundary neighbors (plus itself), weights from depth and
/// mean-RGB similarity (color distances on the 0..255 scale), normalized
/// to sum to 1. Returns a region-wise constant map.
Plane compactness_prior(const Plane& s1, const RegionMask& mask, const Plane& depth,
                        const ColorImage& image, double sigma_dep, double sigma_col);

}  // namespace rexnet

#endif  // REXNET_DEPTH_HPP
