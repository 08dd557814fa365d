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

#include "rexnet/region.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "rexnet/png_io.hpp"

namespace rexnet {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

struct LabPixel {
    double l, a, b;
};

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

LabPixel rgb_to_lab(double r, double g, double b) {
    const double rl = srgb_to_linear(r), gl = srgb_to_linear(g), bl = srgb_to_linear(b);
    // sRGB D65
    double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
    x /= 0.95047;
    z /= 1.08883;
    auto f = [](double t) {
        return t > 0.008856 ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0;
    };
    const double fx = f(x), fy = f(y), fz = f(z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// Row-major 4-connected component labeling of an arbitrary key grid.
/// Returns component ids in discovery order.
std::vector<std::int32_t> connected_components(const std::vector<std::int32_t>& key, int h, int w,
                                               int& count) {
    std::vector<std::int32_t> comp(key.size(), -1);
    std::vector<std::int32_t> stack;
    count = 0;
    for (std::size_t start = 0; start < key.size(); ++start) {
        if (comp[start] != -1) continue;
        const std::int32_t id = count++;
        comp[start] = id;
        stack.clear();
        stack.push_back(static_cast<std::int32_t>(start));
        while (!stack.empty()) {
            const std::int32_t cur = stack.back();
            stack.pop_back();
            const int y = cur / w, x = cur % w;
            for (int d = 0; d < 4; ++d) {
                const int ny = y + kDy[d], nx = x + kDx[d];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                const std::int32_t ni = ny * w + nx;
                if (comp[ni] == -1 && key[ni] == key[cur]) {
                    comp[ni] = id;
                    stack.push_back(ni);
                }
            }
        }
    }
    return comp;
}

std::vector<std::int32_t> relabel_contiguous(std::vector<std::int32_t>& labels, int& count) {
    std::vector<std::int32_t> remap;
    std::int32_t next = 0;
    std::vector<std::int32_t> old_to_new;
    for (std::int32_t& l : labels) {
        if (l >= static_cast<std::int32_t>(old_to_new.size())) {
            old_to_new.resize(l + 1, -1);
        }
        if (old_to_new[l] == -1) old_to_new[l] = next++;
        l = old_to_new[l];
    }
    count = next;
    return old_to_new;
}

}  // namespace

RegionMask slic_superpixels(const ColorImage& image, int k, double compactness, int iterations) {
    const int h = image.h, w = image.w;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    if (h <= 0 || w <= 0) throw std::invalid_argument("slic: empty image");
    if (k < 1) throw std::invalid_argument("slic: k must be >= 1");
    if (static_cast<std::size_t>(k) > n) {
        throw std::invalid_argument("slic: k=" + std::to_string(k) + " exceeds pixel count " +
                                    std::to_string(n));
    }

    std::vector<LabPixel> lab(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            lab[static_cast<std::size_t>(y) * w + x] =
                rgb_to_lab(image.at(y, x, 0), image.at(y, x, 1), image.at(y, x, 2));
        }
    }

    // Seed grid: closest nx*ny to k, then closest aspect to the image's,
    // then wider-than-tall so small k still spreads along x.
    int nx = 1, ny = 1;
    {
        const double want_aspect = std::log(static_cast<double>(w) / h);
        double best_diff = std::numeric_limits<double>::infinity();
        double best_aspect = 0.0;
        for (int cy = 1; cy <= std::min(h, k); ++cy) {
            for (int cx : {k / cy, (k + cy - 1) / cy}) {
                cx = std::clamp(cx, 1, w);
                const double diff = std::abs(static_cast<double>(cx) * cy - k);
                const double aspect =
                    std::abs(std::log(static_cast<double>(cx) / cy) - want_aspect);
                if (diff < best_diff ||
                    (diff == best_diff &&
                     (aspect < best_aspect || (aspect == best_aspect && cx > nx)))) {
                    best_diff = diff;
                    best_aspect = aspect;
                    nx = cx;
                    ny = cy;
                }
            }
        }
    }

    struct Center {
        double l, a, b, x, y;
    };
    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);

    auto grad_at = [&](int y, int x) {
        const int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
        const int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
        const LabPixel& a = lab[static_cast<std::size_t>(y) * w + xm];
        const LabPixel& b = lab[static_cast<std::size_t>(y) * w + xp];
        const LabPixel& c = lab[static_cast<std::size_t>(ym) * w + x];
        const LabPixel& d = lab[static_cast<std::size_t>(yp) * w + x];
        const double gx = (b.l - a.l) * (b.l - a.l) + (b.a - a.a) * (b.a - a.a) +
                          (b.b - a.b) * (b.b - a.b);
        const double gy = (d.l - c.l) * (d.l - c.l) + (d.a - c.a) * (d.a - c.a) +
                          (d.b - c.b) * (d.b - c.b);
        return gx + gy;
    };

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int cx = static_cast<int>((i + 0.5) * w / nx);
            int cy = static_cast<int>((j + 0.5) * h / ny);
            cx = std::clamp(cx, 0, w - 1);
            cy = std::clamp(cy, 0, h - 1);
            // move the seed off gradients within its 3x3 neighborhood
            double best = grad_at(cy, cx);
            int bx = cx, by = cy;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = cy + dy, xx = cx + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    const double g = grad_at(yy, xx);
                    if (g < best) {
                        best = g;
                        bx = xx;
                        by = yy;
                    }
                }
            }
            const LabPixel& p = lab[static_cast<std::size_t>(by) * w + bx];
            centers.push_back({p.l, p.a, p.b, static_cast<double>(bx), static_cast<double>(by)});
        }
    }

    const int kc = static_cast<int>(centers.size());
    const double spacing = std::sqrt(static_cast<double>(n) / kc);
    const double inv_s2 = 1.0 / (spacing * spacing);
    const double m2 = compactness * compactness;
    const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * spacing)));

    std::vector<std::int32_t> assign(n, 0);
    std::vector<double> best_d(n);

    for (int iter = 0; iter < iterations; ++iter) {
        std::fill(best_d.begin(), best_d.end(), std::numeric_limits<double>::infinity());
        for (int ci = 0; ci < kc; ++ci) {
            const Center& c = centers[ci];
            const int y0 = std::max(0, static_cast<int>(c.y) - radius);
            const int y1 = std::min(h - 1, static_cast<int>(c.y) + radius);
            const int x0 = std::max(0, static_cast<int>(c.x) - radius);
            const int x1 = std::min(w - 1, static_cast<int>(c.x) + radius);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const LabPixel& p = lab[i];
                    const double dc = (p.l - c.l) * (p.l - c.l) + (p.a - c.a) * (p.a - c.a) +
                                      (p.b - c.b) * (p.b - c.b);
                    const double ds = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
                    const double d = dc + ds * inv_s2 * m2;
                    if (d < best_d[i]) {  // ties keep the smaller center index
                        best_d[i] = d;
                        assign[i] = ci;
                    }
                }
            }
        }
        // recompute centers as cluster means
        std::vector<double> sl(kc, 0.0), sa(kc, 0.0), sb(kc, 0.0), sx(kc, 0.0), sy(kc, 0.0);
        std::vector<int> cnt(kc, 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const int ci = assign[i];
                sl[ci] += lab[i].l;
                sa[ci] += lab[i].a;
                sb[ci] += lab[i].b;
                sx[ci] += x;
                sy[ci] += y;
                ++cnt[ci];
            }
        }
        for (int ci = 0; ci < kc; ++ci) {
            if (cnt[ci] == 0) continue;  // empty cluster keeps its old center
            const double inv = 1.0 / cnt[ci];
            centers[ci] = {sl[ci] * inv, sa[ci] * inv, sb[ci] * inv, sx[ci] * inv, sy[ci] * inv};
        }
    }

    // Enforce one 4-connected component per label: keep the largest
    // component of each cluster, merge every other component into its
    // dominant resolved neighbor.
    int comp_count = 0;
    std::vector<std::int32_t> comp = connected_components(assign, h, w, comp_count);
    std::vector<std::int64_t> comp_size(comp_count, 0);
    std::vector<std::int32_t> comp_label(comp_count, -1);
    for (std::size_t i = 0; i < n; ++i) {
        ++comp_size[comp[i]];
        comp_label[comp[i]] = assign[i];
    }
    std::vector<std::int32_t> keeper(kc, -1);
    for (int c = 0; c < comp_count; ++c) {
        const std::int32_t lbl = comp_label[c];
        if (keeper[lbl] == -1 || comp_size[c] > comp_size[keeper[lbl]]) keeper[lbl] = c;
    }
    std::vector<std::int32_t> root(comp_count, -1);
    for (int c = 0; c < comp_count; ++c) {
        if (keeper[comp_label[c]] == c) root[c] = c;
    }
    bool progress = true;
    while (progress) {
        progress = false;
        std::vector<std::vector<std::pair<std::int32_t, int>>> contact(comp_count);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::int32_t c = comp[static_cast<std::size_t>(y) * w + x];
                if (root[c] != -1) continue;
                for (int d = 0; d < 4; ++d) {
                    const int ny = y + kDy[d], nx = x + kDx[d];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    const std::int32_t nc = comp[static_cast<std::size_t>(ny) * w + nx];
                    if (nc == c || root[nc] == -1) continue;
                    auto& list = contact[c];
                    auto it = std::find_if(list.begin(), list.end(),
                                           [&](const auto& e) { return e.first == root[nc]; });
                    if (it == list.end()) {
                        list.emplace_back(root[nc], 1);
                    } else {
                        ++it->second;
                    }
                }
            }
        }
        for (int c = 0; c < comp_count; ++c) {
            if (root[c] != -1 || contact[c].empty()) continue;
            std::int32_t best = -1;
            int best_cnt = -1;
            for (const auto& [r, cnt2] : contact[c]) {
                if (cnt2 > best_cnt || (cnt2 == best_cnt && r < best)) {
                    best = r;
                    best_cnt = cnt2;
                }
            }
            root[c] = best;
            progress = true;
        }
    }

    RegionMask mask(h, w);
    for (std::size_t i = 0; i < n; ++i) {
        mask.labels[i] = root[comp[i]];
    }
    relabel_contiguous(mask.labels, mask.region_count);
    return mask;
}

Plane thin_edges(const Plane& edges, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw std::invalid_argument("edge threshold must lie in (0,1)");
    }
    const int h = edges.h, w = edges.w;
    Plane kept(h, w, 0.0);

    auto value = [&](int y, int x) {
        if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
        return edges.at(y, x);
    };

    // The suppression axis per pixel is the one with the weakest neighbor
    // pair, an estimate of the ridge normal that stays defined on crests
    // where the raw gradient vanishes.
    constexpr int kAxisX[4] = {1, 1, 0, -1};
    constexpr int kAxisY[4] = {0, 1, 1, 1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double p = edges.at(y, x);
            if (p <= 0.0) continue;
            int best_axis = 0;
            double best_sum = std::numeric_limits<double>::infinity();
            for (int a = 0; a < 4; ++a) {
                const double sum =
                    value(y + kAxisY[a], x + kAxisX[a]) + value(y - kAxisY[a], x - kAxisX[a]);
                if (sum < best_sum) {
                    best_sum = sum;
                    best_axis = a;
                }
            }
            // strict toward the forward neighbor so plateaus thin to one side
            const double fwd = value(y + kAxisY[best_axis], x + kAxisX[best_axis]);
            const double bwd = value(y - kAxisY[best_axis], x - kAxisX[best_axis]);
            if (p > fwd && p >= bwd) kept.at(y, x) = 1.0;
        }
    }

    // hysteresis: strong seeds >= threshold, weak survivors >= threshold/2
    const double low = threshold * 0.5;
    Plane out(h, w, 0.0);
    std::vector<std::int32_t> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (kept.at(y, x) == 1.0 && edges.at(y, x) >= threshold && out.at(y, x) == 0.0) {
                out.at(y, x) = 1.0;
                stack.push_back(y * w + x);
                while (!stack.empty()) {
                    const int cur = stack.back();
                    stack.pop_back();
                    const int cy = cur / w, cx = cur % w;
                    for (int ddy = -1; ddy <= 1; ++ddy) {
                        for (int ddx = -1; ddx <= 1; ++ddx) {
                            const int ny = cy + ddy, nx = cx + ddx;
                            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                            if (out.at(ny, nx) == 0.0 && kept.at(ny, nx) == 1.0 &&
                                edges.at(ny, nx) >= low) {
                                out.at(ny, nx) = 1.0;
                                stack.push_back(ny * w + nx);
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

RegionMask edge_regions(const Plane& thinned) {
    const int h = thinned.h, w = thinned.w;
    const std::size_t n = static_cast<std::size_t>(h) * w;

    // 1-px morphological closing over the clipped 3x3 neighborhood
    std::vector<char> dil(n, 0), closed(n, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            char v = 0;
            for (int dy = -1; dy <= 1 && !v; ++dy) {
                for (int dx = -1; dx <= 1 && !v; ++dx) {
                    const int ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    if (thinned.at(ny, nx) != 0.0) v = 1;
                }
            }
            dil[static_cast<std::size_t>(y) * w + x] = v;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            char v = 1;
            for (int dy = -1; dy <= 1 && v; ++dy) {
                for (int dx = -1; dx <= 1 && v; ++dx) {
                    const int ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    if (!dil[static_cast<std::size_t>(ny) * w + nx]) v = 0;
                }
            }
            closed[static_cast<std::size_t>(y) * w + x] = v;
        }
    }

    RegionMask mask(h, w);
    std::vector<std::int32_t> lab(n, -1);
    std::int32_t next = 0;
    std::vector<std::int32_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (closed[start] || lab[start] != -1) continue;
        const std::int32_t id = next++;
        lab[start] = id;
        stack.clear();
        stack.push_back(static_cast<std::int32_t>(start));
        while (!stack.empty()) {
            const std::int32_t cur = stack.back();
            stack.pop_back();
            const int y = cur / w, x = cur % w;
            for (int d = 0; d < 4; ++d) {
                const int ny = y + kDy[d], nx = x + kDx[d];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                const std::int32_t ni = ny * w + nx;
                if (!closed[ni] && lab[ni] == -1) {
                    lab[ni] = id;
                    stack.push_back(ni);
                }
            }
        }
    }

    if (next == 0) {
        std::cerr << "edge_regions: no non-edge pixels, emitting a single whole-image region\n";
        mask.region_count = 1;
        std::fill(mask.labels.begin(), mask.labels.end(), 0);
        return mask;
    }

    // absorb edge pixels into the 4-adjacent region with most contact
    bool pending = true;
    while (pending) {
        pending = false;
        bool assigned_any = false;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                if (lab[i] != -1) continue;
                int cnt[4] = {0, 0, 0, 0};
                std::int32_t cand[4];
                int ncand = 0;
                for (int d = 0; d < 4; ++d) {
                    const int ny = y + kDy[d], nx = x + kDx[d];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    const std::int32_t nl = lab[static_cast<std::size_t>(ny) * w + nx];
                    if (nl == -1) continue;
                    int slot = -1;
                    for (int s = 0; s < ncand; ++s) {
                        if (cand[s] == nl) slot = s;
                    }
                    if (slot == -1) {
                        slot = ncand++;
                        cand[slot] = nl;
                        cnt[slot] = 0;
                    }
                    ++cnt[slot];
                }
                if (ncand == 0) {
                    pending = true;
                    continue;
                }
                std::int32_t best = cand[0];
                int best_cnt = cnt[0];
                for (int s = 1; s < ncand; ++s) {
                    if (cnt[s] > best_cnt || (cnt[s] == best_cnt && cand[s] < best)) {
                        best = cand[s];
                        best_cnt = cnt[s];
                    }
                }
                lab[i] = best;
                assigned_any = true;
            }
        }
        if (pending && !assigned_any) {
            throw std::runtime_error("edge_regions: unreachable edge pixels");
        }
    }

    mask.labels = std::move(lab);
    relabel_contiguous(mask.labels, mask.region_count);
    return mask;
}

std::vector<RoI> region_rois(const RegionMask& mask) {
    std::vector<RoI> rois(mask.region_count);
    for (int r = 0; r < mask.region_count; ++r) {
        rois[r] = {r, mask.w, mask.h, -1, -1};
    }
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            RoI& r = rois[mask.at(y, x)];
            r.x0 = std::min(r.x0, x);
            r.y0 = std::min(r.y0, y);
            r.x1 = std::max(r.x1, x);
            r.y1 = std::max(r.y1, y);
        }
    }
    return rois;
}

DownsampledMask downsample_mask(const RegionMask& mask, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
    const int ph = ((mask.h + factor - 1) / factor) * factor;
    const int pw = ((mask.w + factor - 1) / factor) * factor;

    DownsampledMask out;
    out.h = ph / factor;
    out.w = pw / factor;
    out.labels.assign(static_cast<std::size_t>(out.h) * out.w, 0);

    std::vector<int> counts(mask.region_count, 0);
    std::vector<std::int32_t> touched;
    for (int by = 0; by < out.h; ++by) {
        for (int bx = 0; bx < out.w; ++bx) {
            touched.clear();
            for (int dy = 0; dy < factor; ++dy) {
                const int sy = std::min(by * factor + dy, mask.h - 1);
                for (int dx = 0; dx < factor; ++dx) {
                    const int sx = std::min(bx * factor + dx, mask.w - 1);
                    const std::int32_t l = mask.at(sy, sx);
                    if (counts[l] == 0) touched.push_back(l);
                    ++counts[l];
                }
            }
            std::int32_t best = -1;
            int best_cnt = -1;
            for (std::int32_t l : touched) {
                // majority; ties go to the smallest label
                if (counts[l] > best_cnt || (counts[l] == best_cnt && l < best)) {
                    best = l;
                    best_cnt = counts[l];
                }
                counts[l] = 0;
            }
            out.labels[static_cast<std::size_t>(by) * out.w + bx] = best;
        }
    }

    // relabel contiguous, recording parents that vanished
    std::vector<std::int32_t> old_to_new(mask.region_count, -1);
    std::int32_t next = 0;
    for (std::int32_t& l : out.labels) {
        if (old_to_new[l] == -1) old_to_new[l] = next++;
        l = old_to_new[l];
    }
    out.region_count = next;
    out.parent_to_ds = std::move(old_to_new);
    return out;
}

std::vector<RegionLabel> region_label(const RegionMask& mask, const Plane& gt) {
    if (gt.h != mask.h || gt.w != mask.w) {
        throw std::invalid_argument("region_label: ground truth dims do not match mask");
    }
    std::vector<std::int64_t> area(mask.region_count, 0), inside(mask.region_count, 0);
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            const std::int32_t l = mask.at(y, x);
            ++area[l];
            if (gt.at(y, x) != 0.0) ++inside[l];
        }
    }
    std::vector<RegionLabel> out(mask.region_count);
    for (int r = 0; r < mask.region_count; ++r) {
        if (inside[r] * 5 > area[r] * 4) {
            out[r] = RegionLabel::salient;
        } else if ((area[r] - inside[r]) * 5 > area[r] * 4) {
            out[r] = RegionLabel::background;
        } else {
            out[r] = RegionLabel::ignore;
        }
    }
    return out;
}

std::vector<std::int32_t> resample_labels_nn(const RegionMask& mask, int h, int w) {
    std::vector<std::int32_t> out(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        const int sy = std::min(mask.h - 1,
                                static_cast<int>((y + 0.5) * mask.h / static_cast<double>(h)));
        for (int x = 0; x < w; ++x) {
            const int sx = std::min(mask.w - 1,
                                    static_cast<int>((x + 0.5) * mask.w / static_cast<double>(w)));
            out[static_cast<std::size_t>(y) * w + x] = mask.at(sy, sx);
        }
    }
    return out;
}

Plane region_mean_map(const Plane& map, const RegionMask& mask) {
    const std::vector<std::int32_t> lab = resample_labels_nn(mask, map.h, map.w);
    std::vector<double> sum(mask.region_count, 0.0);
    std::vector<std::int64_t> cnt(mask.region_count, 0);
    std::vector<double> first(mask.region_count, 0.0);
    std::vector<char> constant(mask.region_count, 1);
    for (std::size_t i = 0; i < map.v.size(); ++i) {
        const std::int32_t l = lab[i];
        if (cnt[l] == 0) {
            first[l] = map.v[i];
        } else if (map.v[i] != first[l]) {
            constant[l] = 0;
        }
        sum[l] += map.v[i];
        ++cnt[l];
    }
    std::vector<double> mean(mask.region_count, 0.0);
    for (int r = 0; r < mask.region_count; ++r) {
        if (cnt[r] == 0) continue;
        mean[r] = constant[r] ? first[r] : sum[r] / static_cast<double>(cnt[r]);
    }
    Plane out(map.h, map.w);
    for (std::size_t i = 0; i < map.v.size(); ++i) out.v[i] = mean[lab[i]];
    return out;
}

std::vector<int> region_areas(const RegionMask& mask) {
    std::vector<int> areas(mask.region_count, 0);
    for (std::int32_t l : mask.labels) ++areas[l];
    return areas;
}

void validate_region_mask(const RegionMask& mask) {
    if (mask.region_count <= 0) throw std::runtime_error("region mask has no regions");
    std::vector<char> seen(mask.region_count, 0);
    for (std::int32_t l : mask.labels) {
        if (l < 0 || l >= mask.region_count) {
            throw std::runtime_error("region label out of range: " + std::to_string(l));
        }
        seen[l] = 1;
    }
    for (int r = 0; r < mask.region_count; ++r) {
        if (!seen[r]) throw std::runtime_error("missing region label " + std::to_string(r));
    }
    int comp_count = 0;
    std::vector<std::int32_t> comp =
        connected_components(mask.labels, mask.h, mask.w, comp_count);
    if (comp_count != mask.region_count) {
        throw std::runtime_error("regions are not 4-connected: " + std::to_string(comp_count) +
                                 " components for " + std::to_string(mask.region_count) +
                                 " labels");
    }
}

void save_region_mask(const std::string& path, const RegionMask& mask) {
    if (mask.region_count > 65536) {
        throw std::runtime_error("region count exceeds 16-bit PNG range: " +
                                 std::to_string(mask.region_count));
    }
    std::vector<std::uint16_t> pixels(mask.labels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = static_cast<std::uint16_t>(mask.labels[i]);
    }
    write_png_gray16(path, pixels, mask.w, mask.h);
}

RegionMask load_region_mask(const std::string& path) {
    PngData png = read_png(path);
    if (png.channels != 1) {
        throw std::runtime_error("region mask must be single-channel: " + path);
    }
    RegionMask mask(png.height, png.width);
    std::int32_t max_label = 0;
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        mask.labels[i] = png.pixels[i];
        max_label = std::max(max_label, mask.labels[i]);
    }
    mask.region_count = max_label + 1;
    validate_region_mask(mask);
    return mask;
}

}  // namespace rexnet
