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

#ifndef REXNET_ROI_POOL_HPP
#define REXNET_ROI_POOL_HPP

#include <cstdint>
#include <vector>

#include "rexnet/layers.hpp"
#include "rexnet/region.hpp"
#include "rexnet/tensor.hpp"

namespace rexnet {

/// A fixed-size feature pooled from one region. Cells whose sub-window
/// holds no cell of the region are exactly 0 and carry the empty-argmax
/// sentinel.
struct PooledRegionFeature {
    int region_id = 0;
    bool vanished = false;  // region absent from the downsampled mask
    int channels = 0, ph = 0, pw = 0;
    std::vector<double> values;             // channels*ph*pw, row-major
    std::vector<std::int64_t> argmax;       // flat index into the feature tensor

    double at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * ph + y) * pw + x];
    }
    bool all_zero() const {
        for (double v : values) {
            if (v != 0.0) return false;
        }
        return true;
    }
};

/// Maps an image-space RoI rect into feature coordinates so the rect
/// covers the region: x0,y0 floored, x1,y1 ceiled after division.
RoI roi_to_feature_coords(const RoI& image_roi, int factor, int feat_h, int feat_w);

/// Max pooling restricted to feature cells carrying the RoI's region in
/// the downsampled mask; sub-windows come from the integer-boundary split
/// of the RoI extent. Ties take the first row-major cell.
std::vector<PooledRegionFeature> mask_roi_pool_forward(const Tensor& features,
                                                       const std::vector<RoI>& rois,
                                                       const DownsampledMask& mask_ds,
                                                       int pooled_h = 7, int pooled_w = 7);

/// Scatters upstream values onto their argmax sources, summing across
/// RoIs in order. `upstream` holds one gradient buffer per pooled feature.
Tensor mask_roi_pool_backward(const Tensor& features_shape_ref,
                              const std::vector<PooledRegionFeature>& pooled,
                              const std::vector<std::vector<double>>& upstream);

}  // namespace rexnet

#endif  // REXNET_ROI_POOL_HPP
