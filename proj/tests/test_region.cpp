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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "rexnet/png_io.hpp"
#include "rexnet/region.hpp"

using namespace rexnet;

namespace {

ColorImage constant_image(int h, int w, double r, double g, double b) {
    ColorImage img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    }
    return img;
}

ColorImage noise_image(int h, int w, std::uint64_t seed) {
    ColorImage img(h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (double& v : img.rgb) v = dist(rng);
    return img;
}

}  // namespace

TEST_CASE("slic: k=1 gives a single region covering all pixels") {
    ColorImage img = noise_image(17, 23, 5);
    RegionMask mask = slic_superpixels(img, 1, 10.0, 10);
    CHECK(mask.region_count == 1);
    for (std::int32_t l : mask.labels) CHECK(l == 0);
    validate_region_mask(mask);
}

TEST_CASE("slic: constant image with k=4 degenerates to a spatial grid") {
    ColorImage img = constant_image(32, 32, 0.5, 0.5, 0.5);
    RegionMask mask = slic_superpixels(img, 4, 10.0, 10);
    validate_region_mask(mask);
    REQUIRE(mask.region_count == 4);
    std::vector<int> areas = region_areas(mask);
    for (int a : areas) {
        CHECK(a >= 256 * 0.8);
        CHECK(a <= 256 * 1.2);
    }
    // centroids form a 2x2 grid
    std::vector<double> cx(4, 0.0), cy(4, 0.0);
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
            cx[mask.at(y, x)] += x;
            cy[mask.at(y, x)] += y;
        }
    }
    int left = 0, top = 0;
    for (int r = 0; r < 4; ++r) {
        cx[r] /= areas[r];
        cy[r] /= areas[r];
        if (cx[r] < 16) ++left;
        if (cy[r] < 16) ++top;
    }
    CHECK(left == 2);
    CHECK(top == 2);
}

TEST_CASE("slic: two-tone vertical split with k=2 follows the color edge") {
    ColorImage img(32, 32);
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
            if (x < 16) {
                img.at(y, x, 0) = 0.9;  // red
            } else {
                img.at(y, x, 2) = 0.9;  // blue
            }
        }
    }
    RegionMask mask = slic_superpixels(img, 2, 10.0, 10);
    validate_region_mask(mask);
    REQUIRE(mask.region_count == 2);
    for (int y = 0; y < 32; ++y) {
        int transitions = 0;
        int tcol = -1;
        for (int x = 1; x < 32; ++x) {
            if (mask.at(y, x) != mask.at(y, x - 1)) {
                ++transitions;
                tcol = x;
            }
        }
        CHECK(transitions == 1);
        CHECK(std::abs(tcol - 16) <= 1);  // color edge sits between columns 15 and 16
    }
}

TEST_CASE("slic rejects k above the pixel count") {
    ColorImage img = noise_image(4, 4, 9);
    CHECK_THROWS_AS(slic_superpixels(img, 17, 10.0, 5), std::invalid_argument);
}

TEST_CASE("slic output is a valid region mask on noise images") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        ColorImage img = noise_image(33, 29, seed);
        RegionMask mask = slic_superpixels(img, 25, 10.0, 10);
        validate_region_mask(mask);
        std::vector<int> areas = region_areas(mask);
        long long total = 0;
        for (int a : areas) {
            CHECK(a > 0);
            total += a;
        }
        CHECK(total == 33 * 29);
    }
}

TEST_CASE("thin_edges: all-zero map has no edge pixels") {
    Plane edges(16, 16, 0.0);
    Plane out = thin_edges(edges, 0.5);
    for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("thin_edges: tapered ridge thins to its per-column max") {
    Plane edges(20, 20, 0.0);
    for (int x = 2; x <= 17; ++x) {
        edges.at(9, x) = 0.5;
        edges.at(10, x) = 0.9;
        edges.at(11, x) = 0.5;
    }
    Plane out = thin_edges(edges, 0.5);
    // oracle: the per-column max of the ridge sits on row 10
    for (int x = 4; x <= 15; ++x) {
        CHECK(out.at(10, x) == 1.0);
        CHECK(out.at(9, x) == 0.0);
        CHECK(out.at(11, x) == 0.0);
    }
    for (int y = 0; y < 20; ++y) {
        if (y >= 9 && y <= 11) continue;
        for (int x = 0; x < 20; ++x) CHECK(out.at(y, x) == 0.0);
    }
}

TEST_CASE("thin_edges: isolated high pixel is retained") {
    Plane edges(10, 10, 0.0);
    edges.at(5, 5) = 0.8;
    Plane out = thin_edges(edges, 0.5);
    double total = 0.0;
    for (double v : out.v) total += v;
    CHECK(total == 1.0);
    CHECK(out.at(5, 5) == 1.0);
}

TEST_CASE("thin_edges: sub-threshold ridge is removed by hysteresis") {
    Plane edges(12, 12, 0.0);
    for (int x = 1; x <= 10; ++x) {
        edges.at(5, x) = 0.2;
        edges.at(6, x) = 0.3;
        edges.at(7, x) = 0.2;
    }
    Plane out = thin_edges(edges, 0.7);  // low threshold 0.35 > 0.3
    for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("thin_edges rejects thresholds outside (0,1)") {
    Plane edges(4, 4, 0.0);
    CHECK_THROWS_AS(thin_edges(edges, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(thin_edges(edges, 1.0), std::invalid_argument);
}

TEST_CASE("edge_regions: no edges give one region") {
    Plane thinned(8, 8, 0.0);
    RegionMask mask = edge_regions(thinned);
    CHECK(mask.region_count == 1);
    validate_region_mask(mask);
}

TEST_CASE("edge_regions: a full-width horizontal line splits the plane") {
    Plane thinned(12, 12, 0.0);
    for (int x = 0; x < 12; ++x) thinned.at(6, x) = 1.0;
    RegionMask mask = edge_regions(thinned);
    validate_region_mask(mask);
    CHECK(mask.region_count == 2);
    CHECK(mask.at(0, 0) != mask.at(11, 0));
}

TEST_CASE("edge_regions: closed square contour yields inside and outside") {
    Plane thinned(16, 16, 0.0);
    for (int t = 4; t <= 11; ++t) {
        thinned.at(4, t) = 1.0;
        thinned.at(11, t) = 1.0;
        thinned.at(t, 4) = 1.0;
        thinned.at(t, 11) = 1.0;
    }
    RegionMask mask = edge_regions(thinned);
    validate_region_mask(mask);
    REQUIRE(mask.region_count == 2);

    // flood-fill oracle: interior pixels enclosed by the contour
    int interior = 0;
    for (int y = 5; y <= 10; ++y) {
        for (int x = 5; x <= 10; ++x) ++interior;
    }
    const std::int32_t inside_label = mask.at(7, 7);
    std::vector<int> areas = region_areas(mask);
    CHECK(areas[inside_label] == interior);
}

TEST_CASE("region_rois: single region spans the full image") {
    RegionMask mask(5, 7);
    mask.region_count = 1;
    auto rois = region_rois(mask);
    REQUIRE(rois.size() == 1);
    CHECK(rois[0].x0 == 0);
    CHECK(rois[0].y0 == 0);
    CHECK(rois[0].x1 == 6);
    CHECK(rois[0].y1 == 4);
}

TEST_CASE("region_rois: tight rect around two pixels") {
    RegionMask mask(6, 6);
    mask.region_count = 2;
    mask.at(2, 3) = 1;
    mask.at(2, 4) = 1;
    auto rois = region_rois(mask);
    REQUIRE(rois.size() == 2);
    CHECK(rois[1].x0 == 3);
    CHECK(rois[1].y0 == 2);
    CHECK(rois[1].x1 == 4);
    CHECK(rois[1].y1 == 2);
}

TEST_CASE("region_rois: interleaved checkerboard extents cover the image") {
    RegionMask mask(4, 4);
    mask.region_count = 2;
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) mask.at(y, x) = (x + y) % 2;
    }
    auto rois = region_rois(mask);
    for (const RoI& r : rois) {
        CHECK(r.x0 == 0);
        CHECK(r.y0 == 0);
        CHECK(r.x1 == 3);
        CHECK(r.y1 == 3);
    }
}

TEST_CASE("downsample_mask: constant mask stays constant") {
    RegionMask mask(32, 32);
    mask.region_count = 1;
    DownsampledMask ds = downsample_mask(mask, 16);
    CHECK(ds.h == 2);
    CHECK(ds.w == 2);
    CHECK(ds.region_count == 1);
    for (std::int32_t l : ds.labels) CHECK(l == 0);
    CHECK(ds.parent_to_ds[0] == 0);
}

TEST_CASE("downsample_mask: vertical 50/50 split maps to a 2x2 split") {
    RegionMask mask(32, 32);
    mask.region_count = 2;
    for (int y = 0; y < 32; ++y) {
        for (int x = 16; x < 32; ++x) mask.at(y, x) = 1;
    }
    DownsampledMask ds = downsample_mask(mask, 16);
    CHECK(ds.at(0, 0) == ds.parent_to_ds[0]);
    CHECK(ds.at(0, 1) == ds.parent_to_ds[1]);
    CHECK(ds.at(1, 0) == ds.parent_to_ds[0]);
    CHECK(ds.at(1, 1) == ds.parent_to_ds[1]);
    CHECK(ds.region_count == 2);
}

TEST_CASE("downsample_mask: three horizontal stripes keep one stripe per row") {
    RegionMask mask(48, 48);
    mask.region_count = 3;
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 48; ++x) mask.at(y, x) = y / 16;
    }
    DownsampledMask ds = downsample_mask(mask, 16);
    REQUIRE(ds.h == 3);
    REQUIRE(ds.w == 3);
    for (int by = 0; by < 3; ++by) {
        for (int bx = 0; bx < 3; ++bx) CHECK(ds.at(by, bx) == ds.parent_to_ds[by]);
    }
}

TEST_CASE("downsample_mask: majority per block matches a counting oracle") {
    std::mt19937_64 rng(77);
    RegionMask mask(20, 24);
    mask.region_count = 5;
    // random Voronoi-ish labels made 4-connected by columns bands plus noise rows
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 24; ++x) mask.at(y, x) = std::min(4, x / 5);
    }
    DownsampledMask ds = downsample_mask(mask, 4);
    for (int by = 0; by < ds.h; ++by) {
        for (int bx = 0; bx < ds.w; ++bx) {
            int counts[5] = {0, 0, 0, 0, 0};
            for (int dy = 0; dy < 4; ++dy) {
                for (int dx = 0; dx < 4; ++dx) {
                    counts[mask.at(std::min(by * 4 + dy, 19), std::min(bx * 4 + dx, 23))]++;
                }
            }
            int best = 0;
            for (int l = 1; l < 5; ++l) {
                if (counts[l] > counts[best]) best = l;
            }
            CHECK(ds.at(by, bx) == ds.parent_to_ds[best]);
        }
    }
}

TEST_CASE("downsample_mask records vanished regions") {
    RegionMask mask(32, 32);
    mask.region_count = 2;
    for (int x = 0; x < 32; ++x) mask.at(0, x) = 1;  // one thin row vanishes at 16x
    DownsampledMask ds = downsample_mask(mask, 16);
    CHECK(ds.region_count == 1);
    CHECK(ds.parent_to_ds[0] == 0);
    CHECK(ds.parent_to_ds[1] == -1);
}

TEST_CASE("region_label follows the strict 80% rule") {
    RegionMask mask(10, 30);
    mask.region_count = 3;
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 30; ++x) mask.at(y, x) = x / 10;
    }
    Plane gt(10, 30, 0.0);
    // region 0 fully inside
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 10; ++x) gt.at(y, x) = 1.0;
    }
    // region 1: exactly half inside
    for (int y = 0; y < 5; ++y) {
        for (int x = 10; x < 20; ++x) gt.at(y, x) = 1.0;
    }
    // region 2: 81 of 100 inside
    int added = 0;
    for (int y = 0; y < 10 && added < 81; ++y) {
        for (int x = 20; x < 30 && added < 81; ++x) {
            gt.at(y, x) = 1.0;
            ++added;
        }
    }
    auto labels = region_label(mask, gt);
    CHECK(labels[0] == RegionLabel::salient);
    CHECK(labels[1] == RegionLabel::ignore);
    CHECK(labels[2] == RegionLabel::salient);
}

TEST_CASE("region_label: exactly 80% inside is ignore") {
    RegionMask mask(10, 10);
    mask.region_count = 1;
    Plane gt(10, 10, 0.0);
    int added = 0;
    for (int y = 0; y < 10 && added < 80; ++y) {
        for (int x = 0; x < 10 && added < 80; ++x) {
            gt.at(y, x) = 1.0;
            ++added;
        }
    }
    auto labels = region_label(mask, gt);
    CHECK(labels[0] == RegionLabel::ignore);
}

TEST_CASE("region_mean_map: region-constant input is unchanged, exactly") {
    RegionMask mask(8, 8);
    mask.region_count = 2;
    for (int y = 4; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) mask.at(y, x) = 1;
    }
    Plane map(8, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) map.at(y, x) = y < 4 ? 0.1 : 0.7;
    }
    Plane out = region_mean_map(map, mask);
    CHECK(out.v == map.v);
}

TEST_CASE("region_mean_map: half zeros half ones average to one half") {
    RegionMask mask(4, 4);
    mask.region_count = 1;
    Plane map(4, 4, 0.0);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 2; ++x) map.at(y, x) = 1.0;
    }
    Plane out = region_mean_map(map, mask);
    for (double v : out.v) CHECK(v == 0.5);
}

TEST_CASE("region_mean_map matches a scalar accumulation oracle and is idempotent") {
    ColorImage img = noise_image(24, 24, 31);
    RegionMask mask = slic_superpixels(img, 12, 10.0, 5);
    Plane map(24, 24);
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (double& v : map.v) v = dist(rng);

    Plane out = region_mean_map(map, mask);

    std::vector<double> sum(mask.region_count, 0.0);
    std::vector<int> cnt(mask.region_count, 0);
    for (int y = 0; y < 24; ++y) {
        for (int x = 0; x < 24; ++x) {
            sum[mask.at(y, x)] += map.at(y, x);
            ++cnt[mask.at(y, x)];
        }
    }
    for (int y = 0; y < 24; ++y) {
        for (int x = 0; x < 24; ++x) {
            const double expect = sum[mask.at(y, x)] / cnt[mask.at(y, x)];
            CHECK(out.at(y, x) == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    Plane twice = region_mean_map(out, mask);
    CHECK(twice.v == out.v);
}

TEST_CASE("region mask PNG round trip") {
    ColorImage img = noise_image(19, 21, 41);
    RegionMask mask = slic_superpixels(img, 9, 10.0, 5);
    const std::string path =
        (std::filesystem::temp_directory_path() / "rexnet_mask_roundtrip.png").string();
    save_region_mask(path, mask);
    RegionMask back = load_region_mask(path);
    CHECK(back.region_count == mask.region_count);
    CHECK(back.labels == mask.labels);
    std::remove(path.c_str());
}

TEST_CASE("loading a mask with a gap in its labels fails") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "rexnet_mask_gap.png").string();
    std::vector<std::uint16_t> pixels(16, 0);
    pixels[5] = 2;  // labels {0,2}: label 1 missing
    write_png_gray16(path, pixels, 4, 4);
    CHECK_THROWS(load_region_mask(path));
    std::remove(path.c_str());
}
