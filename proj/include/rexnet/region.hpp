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

#ifndef REXNET_REGION_HPP
#define REXNET_REGION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rexnet/image.hpp"

namespace rexnet {

/// Per-pixel region labels partitioning an image. Labels are exactly
/// {0..region_count-1}, each label present and 4-connected.
struct RegionMask {
    int h = 0, w = 0;
    int region_count = 0;
    std::vector<std::int32_t> labels;

    RegionMask() = default;
    RegionMask(int h_, int w_)
        : h(h_), w(w_), labels(static_cast<std::size_t>(h_) * w_, 0) {}

    std::int32_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * w + x]; }
    std::int32_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * w + x]; }
};

/// Tight external bounding rectangle of one region, inclusive pixel bounds.
struct RoI {
    int region_id = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// 16x-downsampled label grid used by the mask-based RoI pooling. Cells
/// keep the correspondence to parent regions through `parent_to_ds`
/// (-1 marks regions that vanished under majority voting; their RoIs pool
/// to all-zero features). Majority voting can in rare cases leave one
/// label spatially split, which is harmless: pooling is defined per cell.
struct DownsampledMask {
    int h = 0, w = 0;
    int region_count = 0;
    std::vector<std::int32_t> labels;
    std::vector<std::int32_t> parent_to_ds;

    std::int32_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * w + x]; }
};

enum class RegionLabel { salient, background, ignore };

/// SLIC oversegmentation in CIELab with the combined color+spatial metric.
/// Connectivity is enforced by merging orphan components into their
/// dominant neighbor; labels come out contiguous in row-major first-use
/// order.
RegionMask slic_superpixels(const ColorImage& image, int k, double compactness, int iterations);

/// Non-maximum suppression across the local gradient direction followed by
/// hysteresis (low threshold = threshold/2). Returns a {0,1} plane.
Plane thin_edges(const Plane& edges, double threshold);

/// Partition along thinned edges: 1-px morphological closing, connected
/// components of non-edge pixels, edge pixels absorbed into the 4-adjacent
/// region with the most neighboring pixels (ties to the smaller label).
RegionMask edge_regions(const Plane& thinned);

std::vector<RoI> region_rois(const RegionMask& mask);

DownsampledMask downsample_mask(const RegionMask& mask, int factor);

/// >80% of pixels inside ground truth -> salient, >80% outside ->
/// background, otherwise ignore. Exact integer arithmetic; exactly 80%
/// is ignore.
std::vector<RegionLabel> region_label(const RegionMask& mask, const Plane& gt);

/// Nearest-neighbor lookup of region labels at an arbitrary resolution.
std::vector<std::int32_t> resample_labels_nn(const RegionMask& mask, int h, int w);

/// Replaces every pixel by the mean of its region (mask resampled to the
/// map's resolution by nearest neighbor). Regions that are already
/// constant are passed through untouched, which makes the op exactly
/// idempotent.
Plane region_mean_map(const Plane& map, const RegionMask& mask);

std::vector<int> region_areas(const RegionMask& mask);

/// Throws std::runtime_error if labels are not contiguous from 0 or any
/// region is not a single 4-connected component.
void validate_region_mask(const RegionMask& mask);

// 16-bit single-channel PNG persistence; labels above 65535 are rejected.
void save_region_mask(const std::string& path, const RegionMask& mask);
RegionMask load_region_mask(const std::string& path);

}  // namespace rexnet

#endif  // REXNET_REGION_HPP
