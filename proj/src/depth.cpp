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

#include "rexnet/depth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace rexnet {

Plane transform_depth(const Plane& raw) {
    for (double v : raw.v) {
        if (!std::isfinite(v)) throw std::invalid_argument("raw depth has non-finite values");
    }
    Plane filled = raw;
    // breadth-first fill of invalid (0) pixels from the nearest valid one;
    // ties resolve by row-major queue order
    std::deque<int> queue;
    for (int y = 0; y < raw.h; ++y) {
        for (int x = 0; x < raw.w; ++x) {
            if (raw.at(y, x) != 0.0) queue.push_back(y * raw.w + x);
        }
    }
    if (!queue.empty()) {
        constexpr int dx[4] = {1, -1, 0, 0};
        constexpr int dy[4] = {0, 0, 1, -1};
        while (!queue.empty()) {
            const int cur = queue.front();
            queue.pop_front();
            const int y = cur / raw.w, x = cur % raw.w;
            for (int d = 0; d < 4; ++d) {
                const int ny = y + dy[d], nx = x + dx[d];
                if (ny < 0 || ny >= raw.h || nx < 0 || nx >= raw.w) continue;
                if (filled.at(ny, nx) == 0.0) {
                    filled.at(ny, nx) = filled.at(y, x);
                    queue.push_back(ny * raw.w + nx);
                }
            }
        }
    }

    const double lo = plane_min(filled);
    const double hi = plane_max(filled);
    Plane out(raw.h, raw.w, 0.5);
    if (hi > lo) {
        const double inv = 1.0 / (hi - lo);
        for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = (hi - filled.v[i]) * inv;
    }
    return out;
}

Plane position_prior(const Plane& s0, const Plane& depth, double sigma) {
    if (s0.h != depth.h || s0.w != depth.w) {
        throw std::invalid_argument("position_prior: saliency/depth dims differ");
    }
    Plane out(s0.h, s0.w);
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] = s0.v[i] / (1.0 + std::exp(-sigma * depth.v[i]));
    }
    return out;
}

Plane compactness_prior(const Plane& s1, const RegionMask& mask, const Plane& depth,
                        const ColorImage& image, double sigma_dep, double sigma_col) {
    if (s1.h != mask.h || s1.w != mask.w || depth.h != mask.h || image.h != mask.h ||
        depth.w != mask.w || image.w != mask.w) {
        throw std::invalid_argument("compactness_prior: input dims differ");
    }
    const int R = mask.region_count;
    std::vector<double> sal(R, 0.0), dep(R, 0.0), cr(R, 0.0), cg(R, 0.0), cb(R, 0.0);
    std::vector<std::int64_t> cnt(R, 0);
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            const std::int32_t l = mask.at(y, x);
            sal[l] += s1.at(y, x);
            dep[l] += depth.at(y, x);
            cr[l] += image.at(y, x, 0);
            cg[l] += image.at(y, x, 1);
            cb[l] += image.at(y, x, 2);
            ++cnt[l];
        }
    }
    for (int r = 0; r < R; ++r) {
        const double inv = 1.0 / static_cast<double>(cnt[r]);
        sal[r] *= inv;
        dep[r] *= inv;
        cr[r] *= inv * 255.0;
        cg[r] *= inv * 255.0;
        cb[r] *= inv * 255.0;
    }

    // boundary-adjacent neighbor sets
    std::vector<std::vector<std::int32_t>> nbr(R);
    auto note = [&](std::int32_t a, std::int32_t b) {
        if (a == b) return;
        if (std::find(nbr[a].begin(), nbr[a].end(), b) == nbr[a].end()) nbr[a].push_back(b);
    };
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            if (x + 1 < mask.w) {
                note(mask.at(y, x), mask.at(y, x + 1));
                note(mask.at(y, x + 1), mask.at(y, x));
            }
            if (y + 1 < mask.h) {
                note(mask.at(y, x), mask.at(y + 1, x));
                note(mask.at(y + 1, x), mask.at(y, x));
            }
        }
    }

    std::vector<double> refined(R, 0.0);
    const double dep_denom = 2.0 * sigma_dep * sigma_dep;
    const double col_denom = 2.0 * sigma_col * sigma_col;
    for (int r = 0; r < R; ++r) {
        double wsum = 1.0;          // self weight: exp(0)*exp(0)
        double acc = sal[r];
        std::vector<std::int32_t> order = nbr[r];
        std::sort(order.begin(), order.end());
        for (std::int32_t j : order) {
            const double dd = dep[r] - dep[j];
            const double d0 = cr[r] - cr[j], d1 = cg[r] - cg[j], d2 = cb[r] - cb[j];
            const double col_sq = d0 * d0 + d1 * d1 + d2 * d2;
            const double w = std::exp(-(dd * dd) / dep_denom) * std::exp(-col_sq / col_denom);
            wsum += w;
            acc += w * sal[j];
        }
        refined[r] = acc / wsum;
    }

    Plane out(mask.h, mask.w);
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) out.at(y, x) = refined[mask.at(y, x)];
    }
    return out;
}

}  // namespace rexnet
