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

#include <cmath>
#include <random>

#include "rexnet/depth.hpp"

using namespace rexnet;

TEST_CASE("transform_depth: nearest pixels get 1, linear ramp reverses") {
    Plane raw(1, 11);
    for (int x = 0; x < 11; ++x) raw.at(0, x) = 1.0 + x;  // 1..11
    Plane d = transform_depth(raw);
    CHECK(d.at(0, 0) == 1.0);
    CHECK(d.at(0, 10) == 0.0);
    for (int x = 0; x < 11; ++x) {
        CHECK(d.at(0, x) == doctest::Approx(1.0 - x / 10.0).epsilon(1e-12));
    }
}

TEST_CASE("transform_depth: constant raw maps to all 0.5") {
    Plane raw(4, 4, 7.0);
    Plane d = transform_depth(raw);
    for (double v : d.v) CHECK(v == 0.5);
}

TEST_CASE("transform_depth: zero counts fill from the nearest valid pixel") {
    Plane raw(3, 3, 0.0);
    raw.at(0, 0) = 10.0;
    raw.at(2, 2) = 20.0;
    Plane d = transform_depth(raw);
    // (0,1) fills from (0,0) -> raw 10 -> transformed 1; (2,1) from (2,2) -> 0
    CHECK(d.at(0, 1) == 1.0);
    CHECK(d.at(2, 1) == 0.0);
    for (double v : d.v) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("position_prior spot factors") {
    Plane s0(2, 2, 1.0);
    SUBCASE("D = 0 halves the saliency") {
        Plane d(2, 2, 0.0);
        Plane s1 = position_prior(s0, d, 5.0);
        for (double v : s1.v) CHECK(v == 0.5);
    }
    SUBCASE("D = 1 with sigma 5 scales by 1/(1+e^-5)") {
        Plane d(2, 2, 1.0);
        Plane s1 = position_prior(s0, d, 5.0);
        const double expect = 1.0 / (1.0 + std::exp(-5.0));
        for (double v : s1.v) {
            CHECK(v == expect);
            CHECK(std::abs(v - 0.9933071490757153) <= 1e-9);
        }
    }
    SUBCASE("zero saliency stays zero") {
        Plane z(2, 2, 0.0);
        Plane d(2, 2, 0.7);
        Plane s1 = position_prior(z, d, 5.0);
        for (double v : s1.v) CHECK(v == 0.0);
    }
}

TEST_CASE("position prior never raises saliency") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Plane s0(8, 8), d(8, 8);
    for (double& v : s0.v) v = dist(rng);
    for (double& v : d.v) v = dist(rng);
    Plane s1 = position_prior(s0, d, 5.0);
    for (std::size_t i = 0; i < s1.v.size(); ++i) {
        CHECK(s1.v[i] <= s0.v[i]);
        CHECK(s1.v[i] >= 0.0);
    }
}

namespace {

/// Three vertical strips with hand-set statistics.
struct StripFixture {
    RegionMask mask{6, 9};
    Plane s1{6, 9};
    Plane depth{6, 9};
    ColorImage image{6, 9};

    StripFixture(double d0, double d1, double d2, double sal0, double sal1, double sal2,
                 double gray0, double gray1, double gray2) {
        mask.region_count = 3;
        const double dval[3] = {d0, d1, d2};
        const double sval[3] = {sal0, sal1, sal2};
        const double cval[3] = {gray0, gray1, gray2};
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 9; ++x) {
                const int r = x / 3;
                mask.at(y, x) = r;
                depth.at(y, x) = dval[r];
                s1.at(y, x) = sval[r];
                for (int c = 0; c < 3; ++c) image.at(y, x, c) = cval[r];
            }
        }
    }
};

}  // namespace

TEST_CASE("compactness_prior: identical regions average their neighborhood") {
    StripFixture f(0.5, 0.5, 0.5, 0.1, 0.4, 0.9, 0.5, 0.5, 0.5);
    Plane s2 = compactness_prior(f.s1, f.mask, f.depth, f.image, 0.02, 5.0);
    // all weights 1: region 0 ~ {0,1}, region 1 ~ {0,1,2}, region 2 ~ {1,2}
    CHECK(s2.at(0, 0) == doctest::Approx((0.1 + 0.4) / 2.0).epsilon(1e-12));
    CHECK(s2.at(0, 4) == doctest::Approx((0.1 + 0.4 + 0.9) / 3.0).epsilon(1e-12));
    CHECK(s2.at(0, 8) == doctest::Approx((0.4 + 0.9) / 2.0).epsilon(1e-12));
}

TEST_CASE("compactness_prior: a single region keeps its saliency") {
    RegionMask mask(4, 4);
    mask.region_count = 1;
    Plane s1(4, 4, 0.375);
    Plane depth(4, 4, 0.2);
    ColorImage img(4, 4);
    Plane s2 = compactness_prior(s1, mask, depth, img, 0.02, 5.0);
    for (double v : s2.v) CHECK(v == 0.375);
}

TEST_CASE("compactness_prior: hand-evaluated weighted sum on three strips") {
    // depths 0.50/0.52/0.90, gray colors 100/110/200 (on the 0..255 scale)
    StripFixture f(0.50, 0.52, 0.90, 0.2, 0.6, 0.9, 100.0 / 255.0, 110.0 / 255.0, 200.0 / 255.0);
    Plane s2 = compactness_prior(f.s1, f.mask, f.depth, f.image, 0.02, 5.0);

    auto weight = [](double dd, double gray_d) {
        const double col_sq = 3.0 * gray_d * gray_d;  // equal offset in all three channels
        return std::exp(-dd * dd / (2.0 * 0.02 * 0.02)) * std::exp(-col_sq / (2.0 * 5.0 * 5.0));
    };
    // region 0: neighbors {1}; region 1: neighbors {0,2}; region 2: neighbors {1}
    const double w01 = weight(0.02, 10.0);
    const double w12 = weight(0.38, 90.0);
    const double e0 = (0.2 + w01 * 0.6) / (1.0 + w01);
    const double e1 = (0.6 + w01 * 0.2 + w12 * 0.9) / (1.0 + w01 + w12);
    const double e2 = (0.9 + w12 * 0.6) / (1.0 + w12);
    CHECK(s2.at(3, 0) == doctest::Approx(e0).epsilon(1e-12));
    CHECK(s2.at(3, 4) == doctest::Approx(e1).epsilon(1e-12));
    CHECK(s2.at(3, 8) == doctest::Approx(e2).epsilon(1e-12));
}

TEST_CASE("compactness output is a convex combination of neighborhood saliency") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    StripFixture f(dist(rng), dist(rng), dist(rng), dist(rng), dist(rng), dist(rng), dist(rng),
                   dist(rng), dist(rng));
    Plane s2 = compactness_prior(f.s1, f.mask, f.depth, f.image, 0.02, 5.0);
    const double s[3] = {f.s1.at(0, 0), f.s1.at(0, 4), f.s1.at(0, 8)};
    // region 1 sees all three regions
    CHECK(s2.at(0, 4) >= std::min({s[0], s[1], s[2]}) - 1e-12);
    CHECK(s2.at(0, 4) <= std::max({s[0], s[1], s[2]}) + 1e-12);
    for (double v : s2.v) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
