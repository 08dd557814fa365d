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

#include "rexnet/roi_pool.hpp"

#include <algorithm>
#include <stdexcept>

namespace rexnet {

RoI roi_to_feature_coords(const RoI& image_roi, int factor, int feat_h, int feat_w) {
    RoI out;
    out.region_id = image_roi.region_id;
    out.x0 = std::clamp(image_roi.x0 / factor, 0, feat_w - 1);
    out.y0 = std::clamp(image_roi.y0 / factor, 0, feat_h - 1);
    out.x1 = std::clamp((image_roi.x1 + factor - 1) / factor, out.x0, feat_w - 1);
    out.y1 = std::clamp((image_roi.y1 + factor - 1) / factor, out.y0, feat_h - 1);
    return out;
}

std::vector<PooledRegionFeature> mask_roi_pool_forward(const Tensor& features,
                                                       const std::vector<RoI>& rois,
                                                       const DownsampledMask& mask_ds,
                                                       int pooled_h, int pooled_w) {
    if (features.n != 1) {
        throw std::invalid_argument("mask_roi_pool expects a single-image feature tensor");
    }
    if (features.h != mask_ds.h || features.w != mask_ds.w) {
        throw std::invalid_argument(
            "downsampled mask " + std::to_string(mask_ds.h) + "x" + std::to_string(mask_ds.w) +
            " does not match feature dims " + features.shape_str());
    }
    const int C = features.c;
    std::vector<PooledRegionFeature> out;
    out.reserve(rois.size());

    for (const RoI& roi : rois) {
        PooledRegionFeature f;
        f.region_id = roi.region_id;
        f.channels = C;
        f.ph = pooled_h;
        f.pw = pooled_w;
        f.values.assign(static_cast<std::size_t>(C) * pooled_h * pooled_w, 0.0);
        f.argmax.assign(f.values.size(), kEmptyArgmax);

        const std::int32_t ds_label =
            roi.region_id >= 0 &&
                    roi.region_id < static_cast<int>(mask_ds.parent_to_ds.size())
                ? mask_ds.parent_to_ds[roi.region_id]
                : -1;
        if (ds_label < 0) {
            f.vanished = true;  // pools to all zeros by the vanished-region contract
            out.push_back(std::move(f));
            continue;
        }

        const int rh = roi.y1 - roi.y0 + 1;
        const int rw = roi.x1 - roi.x0 + 1;
        for (int py = 0; py < pooled_h; ++py) {
            const int wy0 = roi.y0 + (py * rh) / pooled_h;
            const int wy1 = roi.y0 + ((py + 1) * rh) / pooled_h;  // exclusive
            for (int px = 0; px < pooled_w; ++px) {
                const int wx0 = roi.x0 + (px * rw) / pooled_w;
                const int wx1 = roi.x0 + ((px + 1) * rw) / pooled_w;
                // find masked cells once, shared across channels
                for (int c = 0; c < C; ++c) {
                    double best = 0.0;
                    std::int64_t best_idx = kEmptyArgmax;
                    for (int y = wy0; y < wy1; ++y) {
                        for (int x = wx0; x < wx1; ++x) {
                            if (mask_ds.at(y, x) != ds_label) continue;
                            const std::size_t idx = features.index(0, c, y, x);
                            if (best_idx == kEmptyArgmax || features.data[idx] > best) {
                                best = features.data[idx];
                                best_idx = static_cast<std::int64_t>(idx);
                            }
                        }
                    }
                    const std::size_t oi =
                        (static_cast<std::size_t>(c) * pooled_h + py) * pooled_w + px;
                    if (best_idx != kEmptyArgmax) {
                        f.values[oi] = best;
                        f.argmax[oi] = best_idx;
                    }
                }
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

Tensor mask_roi_pool_backward(const Tensor& features_shape_ref,
                              const std::vector<PooledRegionFeature>& pooled,
                              const std::vector<std::vector<double>>& upstream) {
    if (pooled.size() != upstream.size()) {
        throw std::invalid_argument("pooled/upstream count mismatch");
    }
    Tensor grad(features_shape_ref.n, features_shape_ref.c, features_shape_ref.h,
                features_shape_ref.w);
    for (std::size_t r = 0; r < pooled.size(); ++r) {
        const PooledRegionFeature& f = pooled[r];
        if (upstream[r].size() != f.values.size()) {
            throw std::invalid_argument("upstream gradient size mismatch for region " +
                                        std::to_string(f.region_id));
        }
        for (std::size_t i = 0; i < f.argmax.size(); ++i) {
            const std::int64_t src = f.argmax[i];
            if (src == kEmptyArgmax) continue;
            grad.data[static_cast<std::size_t>(src)] += upstream[r][i];
        }
    }
    return grad;
}

}  // namespace rexnet
