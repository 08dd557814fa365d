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

#include "rexnet/layers.hpp"

using namespace rexnet;

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t(n, c, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : t.data) v = dist(rng);
    return t;
}

// Linear probe loss sum(coef * out) so dL/dout = coef.
struct ProbeLoss {
    std::vector<double> coef;
    explicit ProbeLoss(std::size_t n, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        coef.resize(n);
        for (double& v : coef) v = dist(rng);
    }
    double eval(const Tensor& out) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += coef[i] * out.data[i];
        return acc;
    }
    Tensor upstream(const Tensor& like) const {
        Tensor u = like;
        for (std::size_t i = 0; i < u.size(); ++i) u.data[i] = coef[i];
        return u;
    }
};

std::vector<ParamView> tensor_as_param(Tensor& t, const std::string& name) {
    t.ensure_grad();
    return {ParamView{name, t.data.data(), t.grad.data(), nullptr, t.size(), {}}};
}

}  // namespace

TEST_CASE("conv: all-zero input yields the bias everywhere") {
    Tensor input(1, 1, 3, 3);
    ConvLayer layer(1, 1, 3, 3, 1, 1, 1);
    for (double& v : layer.weight.data) v = 0.37;
    layer.bias[0] = -2.5;
    Tensor out = conv2d_forward(input, layer);
    for (double v : out.data) CHECK(v == -2.5);
}

TEST_CASE("conv: identity kernel reproduces the input") {
    Tensor input = random_tensor(1, 1, 3, 3, 11);
    ConvLayer layer(1, 1, 3, 3, 1, 1, 1);
    layer.weight.at(0, 0, 1, 1) = 1.0;
    Tensor out = conv2d_forward(input, layer);
    REQUIRE(out.size() == input.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data[i] == input.data[i]);
}

TEST_CASE("conv: dilation 2 on a 5x5 ramp sums the 9 dilated taps") {
    Tensor input(1, 1, 5, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) input.at(0, 0, y, x) = y * 5 + x;
    }
    ConvLayer layer(1, 1, 3, 3, 1, 0, 2);
    for (double& v : layer.weight.data) v = 1.0;
    Tensor out = conv2d_forward(input, layer);
    REQUIRE(out.h == 1);
    REQUIRE(out.w == 1);
    // brute-force oracle: sum over tap positions (0,2,4)x(0,2,4)
    double expect = 0.0;
    for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) expect += input.at(0, 0, 2 * ky, 2 * kx);
    }
    CHECK(out.at(0, 0, 0, 0) == expect);
    CHECK(expect == 108.0);
}

TEST_CASE("conv rejects channel mismatch naming both shapes") {
    Tensor input(1, 3, 4, 4);
    ConvLayer layer(2, 2, 3, 3, 1, 1, 1);
    CHECK_THROWS_WITH_AS(conv2d_forward(input, layer),
                         doctest::Contains("(1,3,4,4)"), std::invalid_argument);
}

TEST_CASE("conv rejects kernel wider than padded input") {
    ConvLayer layer(1, 1, 3, 3, 1, 0, 2);  // effective extent 5
    Tensor input(1, 1, 4, 4);
    CHECK_THROWS_AS(conv2d_forward(input, layer), std::invalid_argument);
}

TEST_CASE("conv backward: zero upstream gives zero gradients") {
    Tensor input = random_tensor(1, 2, 5, 5, 13);
    ConvLayer layer(3, 2, 3, 3, 1, 1, 1);
    layer.weight = random_tensor(3, 2, 3, 3, 14);
    layer.weight.ensure_grad();
    Tensor out = conv2d_forward(input, layer);
    Tensor upstream(out.n, out.c, out.h, out.w);
    Tensor igrad = conv2d_backward(input, layer, upstream);
    for (double v : igrad.data) CHECK(v == 0.0);
    for (double v : layer.weight.grad) CHECK(v == 0.0);
    for (double v : layer.bias_grad) CHECK(v == 0.0);
}

TEST_CASE("conv backward: 1x1 kernel weight grad is sum of input*upstream") {
    Tensor input = random_tensor(1, 1, 2, 2, 21);
    ConvLayer layer(1, 1, 1, 1, 1, 0, 1);
    layer.weight.at(0, 0, 0, 0) = 0.8;
    Tensor out = conv2d_forward(input, layer);
    Tensor upstream = random_tensor(1, 1, 2, 2, 22);
    conv2d_backward(input, layer, upstream);
    double expect = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) expect += input.data[i] * upstream.data[i];
    CHECK(layer.weight.grad[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("conv backward matches finite differences") {
    Tensor input = random_tensor(1, 2, 6, 6, 31);
    ConvLayer layer(2, 2, 3, 3, 1, 1, 1);
    layer.weight = random_tensor(2, 2, 3, 3, 32, -0.5, 0.5);
    layer.weight.ensure_grad();
    layer.bias = {0.1, -0.2};
    ProbeLoss probe(2 * 2 * 6 * 6, 33);

    Tensor out = conv2d_forward(input, layer);
    layer.zero_grads();
    input.zero_grad();
    Tensor igrad = conv2d_backward(input, layer, probe.upstream(out));
    input.grad = igrad.data;

    auto loss = [&]() { return probe.eval(conv2d_forward(input, layer)); };

    std::vector<ParamView> params;
    layer.collect_params("conv", params);
    auto ip = tensor_as_param(input, "input");
    input.grad = igrad.data;
    params.push_back(ip[0]);

    GradCheckReport rep = finite_difference_check(loss, params, 1e-5, 40);
    CHECK(rep.max_rel_error <= 1e-4);
}

TEST_CASE("conv backward matches finite differences with stride and dilation") {
    Tensor input = random_tensor(1, 2, 9, 9, 41);
    ConvLayer layer(2, 2, 3, 3, 2, 2, 2);
    layer.weight = random_tensor(2, 2, 3, 3, 42, -0.5, 0.5);
    layer.weight.ensure_grad();
    Tensor out = conv2d_forward(input, layer);
    ProbeLoss probe(out.size(), 43);
    layer.zero_grads();
    Tensor igrad = conv2d_backward(input, layer, probe.upstream(out));
    input.ensure_grad();
    input.grad = igrad.data;

    auto loss = [&]() { return probe.eval(conv2d_forward(input, layer)); };
    std::vector<ParamView> params;
    layer.collect_params("conv", params);
    params.push_back(ParamView{"input", input.data.data(), input.grad.data(), nullptr,
                               input.size(), {}});
    GradCheckReport rep = finite_difference_check(loss, params, 1e-5, 40);
    CHECK(rep.max_rel_error <= 1e-4);
}

TEST_CASE("maxpool: constant input stays constant") {
    Tensor input(1, 1, 4, 4, 3.25);
    PoolRecord rec = maxpool2x2_forward(input);
    for (double v : rec.output.data) CHECK(v == 3.25);
}

TEST_CASE("maxpool: single window picks max and records argmax") {
    Tensor input(1, 1, 2, 2);
    input.data = {1.0, 2.0, 3.0, 4.0};
    PoolRecord rec = maxpool2x2_forward(input);
    CHECK(rec.output.data[0] == 4.0);
    CHECK(rec.argmax[0] == 3);
}

TEST_CASE("maxpool equals brute-force window scan") {
    Tensor input = random_tensor(1, 3, 8, 8, 51);
    PoolRecord rec = maxpool2x2_forward(input);
    for (int ic = 0; ic < 3; ++ic) {
        for (int oy = 0; oy < 4; ++oy) {
            for (int ox = 0; ox < 4; ++ox) {
                double best = -1e300;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        best = std::max(best, input.at(0, ic, 2 * oy + dy, 2 * ox + dx));
                    }
                }
                CHECK(rec.output.at(0, ic, oy, ox) == best);
                const std::int64_t src = rec.argmax[rec.output.index(0, ic, oy, ox)];
                CHECK(input.data[static_cast<std::size_t>(src)] == best);
            }
        }
    }
}

TEST_CASE("maxpool tie breaks to first row-major index") {
    Tensor input(1, 1, 2, 2, 5.0);
    PoolRecord rec = maxpool2x2_forward(input);
    CHECK(rec.argmax[0] == 0);
}

TEST_CASE("maxpool backward routes upstream to the unique max") {
    Tensor input(1, 1, 2, 2);
    input.data = {1.0, 9.0, 3.0, 4.0};
    PoolRecord rec = maxpool2x2_forward(input);
    Tensor upstream(1, 1, 1, 1);
    upstream.data = {2.5};
    Tensor grad = maxpool2x2_backward(rec, input, upstream);
    CHECK(grad.data[0] == 0.0);
    CHECK(grad.data[1] == 2.5);
    CHECK(grad.data[2] == 0.0);
    CHECK(grad.data[3] == 0.0);
}

TEST_CASE("maxpool backward: zero upstream gives zero grad") {
    Tensor input = random_tensor(1, 2, 4, 4, 61);
    PoolRecord rec = maxpool2x2_forward(input);
    Tensor upstream(1, 2, 2, 2);
    Tensor grad = maxpool2x2_backward(rec, input, upstream);
    for (double v : grad.data) CHECK(v == 0.0);
}

TEST_CASE("maxpool backward matches finite differences away from ties") {
    Tensor input = random_tensor(1, 2, 6, 6, 62);
    PoolRecord rec = maxpool2x2_forward(input);
    ProbeLoss probe(rec.output.size(), 63);
    Tensor igrad = maxpool2x2_backward(rec, input, probe.upstream(rec.output));
    input.ensure_grad();
    input.grad = igrad.data;
    auto loss = [&]() { return probe.eval(maxpool2x2_forward(input).output); };
    auto params = tensor_as_param(input, "input");
    input.grad = igrad.data;
    GradCheckReport rep = finite_difference_check(loss, params, 1e-5, 72);
    CHECK(rep.max_rel_error <= 1e-4);
}

TEST_CASE("pad_to_even replicates bottom and right edges") {
    Tensor input(1, 1, 3, 3);
    for (std::size_t i = 0; i < input.size(); ++i) input.data[i] = static_cast<double>(i);
    Tensor out = pad_to_even(input);
    CHECK(out.h == 4);
    CHECK(out.w == 4);
    CHECK(out.at(0, 0, 3, 0) == input.at(0, 0, 2, 0));
    CHECK(out.at(0, 0, 0, 3) == input.at(0, 0, 0, 2));
    CHECK(out.at(0, 0, 3, 3) == input.at(0, 0, 2, 2));
}

TEST_CASE("activations: spot values") {
    Tensor z(1, 1, 1, 3);
    z.data = {0.0, -3.0, 2.0};
    Tensor s = sigmoid_forward(z);
    CHECK(s.data[0] == 0.5);
    Tensor r = relu_forward(z);
    CHECK(r.data[1] == 0.0);
    CHECK(r.data[2] == 2.0);

    Tensor logits(1, 2, 1, 1);
    logits.data = {0.7, 0.7};
    Tensor p = softmax2_forward(logits);
    CHECK(p.data[0] == 0.5);
    CHECK(p.data[1] == 0.5);
}

TEST_CASE("softmax2 outputs sum to one per position") {
    Tensor logits = random_tensor(3, 2, 4, 4, 71, -5.0, 5.0);
    Tensor p = softmax2_forward(logits);
    for (int in = 0; in < 3; ++in) {
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 4; ++x) {
                const double s = p.at(in, 0, y, x) + p.at(in, 1, y, x);
                CHECK(std::abs(s - 1.0) <= 1e-12);
                CHECK(p.at(in, 0, y, x) > 0.0);
                CHECK(p.at(in, 0, y, x) < 1.0);
            }
        }
    }
}

TEST_CASE("sigmoid and softmax2 backward match finite differences") {
    Tensor z = random_tensor(1, 2, 3, 3, 81, -2.0, 2.0);
    ProbeLoss probe(z.size(), 82);

    SUBCASE("sigmoid") {
        Tensor y = sigmoid_forward(z);
        Tensor g = sigmoid_backward(y, probe.upstream(y));
        z.ensure_grad();
        z.grad = g.data;
        auto loss = [&]() { return probe.eval(sigmoid_forward(z)); };
        auto params = tensor_as_param(z, "z");
        z.grad = g.data;
        GradCheckReport rep = finite_difference_check(loss, params, 1e-5, 30);
        CHECK(rep.max_rel_error <= 1e-4);
    }
    SUBCASE("softmax2") {
        Tensor p = softmax2_forward(z);
        Tensor g = softmax2_backward(p, probe.upstream(p));
        z.ensure_grad();
        z.grad = g.data;
        auto loss = [&]() { return probe.eval(softmax2_forward(z)); };
        auto params = tensor_as_param(z, "z");
        z.grad = g.data;
        GradCheckReport rep = finite_difference_check(loss, params, 1e-5, 30);
        CHECK(rep.max_rel_error <= 1e-4);
    }
    SUBCASE("relu away from kinks") {
        for (double& v : z.data) {
            if (std::abs(v) < 1e-3) v = 0.1;  // keep clear of the kink
        }
        Tensor y = relu_forward(z);
        Tensor g = relu_backward(z, probe.upstream(y));
        z.ensure_grad();
        z.grad = g.data;
        auto loss = [&]() { return probe.eval(relu_forward(z)); };
        auto params = tensor_as_param(z, "z");
        z.grad = g.data;
        GradCheckReport rep = finite_difference_check(loss, params, 1e-5, 30);
        CHECK(rep.max_rel_error <= 1e-4);
    }
}

TEST_CASE("bilinear upsample: factor 1 is identity") {
    Tensor input = random_tensor(1, 2, 3, 3, 91);
    Tensor out = bilinear_upsample(input, 1);
    CHECK(out.data == input.data);
}

TEST_CASE("bilinear upsample: constant plane maps to constant plane") {
    Tensor input(1, 1, 3, 3, 0.7);
    Tensor out = bilinear_upsample(input, 8);
    CHECK(out.h == 24);
    CHECK(out.w == 24);
    for (double v : out.data) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("bilinear upsample: 2x2 ramp factor 2 matches hand interpolation") {
    Tensor input(1, 1, 2, 2);
    input.data = {1.0, 2.0, 3.0, 4.0};
    Tensor out = bilinear_upsample(input, 2);
    // hand-evaluated, corner alignment off
    const std::vector<double> expect = {
        1.0, 1.25, 1.75, 2.0,
        1.5, 1.75, 2.25, 2.5,
        2.5, 2.75, 3.25, 3.5,
        3.0, 3.25, 3.75, 4.0,
    };
    REQUIRE(out.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx(expect[i]).epsilon(1e-15));
    }
}

TEST_CASE("bilinear upsample backward matches finite differences") {
    Tensor input = random_tensor(1, 1, 3, 4, 101);
    Tensor out = bilinear_upsample(input, 4);
    ProbeLoss probe(out.size(), 102);
    Tensor g = bilinear_upsample_backward(input, 4, probe.upstream(out));
    input.ensure_grad();
    input.grad = g.data;
    auto loss = [&]() { return probe.eval(bilinear_upsample(input, 4)); };
    auto params = tensor_as_param(input, "input");
    input.grad = g.data;
    GradCheckReport rep = finite_difference_check(loss, params, 1e-5, 12);
    CHECK(rep.max_rel_error <= 1e-4);
}

TEST_CASE("dense layer forward/backward matches finite differences") {
    DenseLayer layer(3, 5);
    std::mt19937_64 rng(111);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    for (double& v : layer.weight) v = dist(rng);
    for (double& v : layer.bias) v = dist(rng);
    std::vector<double> x(2 * 5);
    for (double& v : x) v = dist(rng);

    ProbeLoss probe(2 * 3, 112);
    std::vector<double> out = dense_forward(layer, x, 2);
    layer.zero_grads();
    std::vector<double> xg = dense_backward(layer, x, 2, probe.coef);

    auto loss = [&]() {
        const auto o = dense_forward(layer, x, 2);
        double acc = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) acc += probe.coef[i] * o[i];
        return acc;
    };
    std::vector<ParamView> params;
    layer.collect_params("fc", params);
    params.push_back(ParamView{"x", x.data(), xg.data(), nullptr, x.size(), {}});
    GradCheckReport rep = finite_difference_check(loss, params, 1e-5, 30);
    CHECK(rep.max_rel_error <= 1e-4);
}

TEST_CASE("dense zero-row skip is exact") {
    DenseLayer layer(2, 4);
    std::mt19937_64 rng(121);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : layer.weight) v = dist(rng);
    for (double& v : layer.bias) v = dist(rng);
    std::vector<double> x(3 * 4, 0.0);
    for (int i = 0; i < 4; ++i) x[4 + i] = dist(rng);  // only row 1 nonzero
    std::vector<char> zero_rows = {1, 0, 1};
    const auto fast = dense_forward(layer, x, 3, &zero_rows);
    const auto slow = dense_forward(layer, x, 3);
    CHECK(fast == slow);

    std::vector<double> up(3 * 2);
    for (double& v : up) v = dist(rng);
    layer.zero_grads();
    const auto g_fast = dense_backward(layer, x, 3, up, &zero_rows);
    const auto wg_fast = layer.weight_grad;
    layer.zero_grads();
    const auto g_slow = dense_backward(layer, x, 3, up);
    CHECK(g_fast == g_slow);
    CHECK(wg_fast == layer.weight_grad);
}

TEST_CASE("sgd: lr 0 leaves params unchanged") {
    std::vector<double> p = {1.0, -2.0};
    std::vector<double> g = {0.5, 0.5};
    std::vector<double> v = {0.0, 0.0};
    std::vector<ParamView> params = {{"p", p.data(), g.data(), v.data(), 2, {}}};
    sgd_step(params, {0.0, 0.9, 5e-4});
    CHECK(p[0] == 1.0);
    CHECK(p[1] == -2.0);
}

TEST_CASE("sgd: scalar step without momentum or decay") {
    std::vector<double> p = {1.0};
    std::vector<double> g = {1.0};
    std::vector<double> v = {0.0};
    std::vector<ParamView> params = {{"p", p.data(), g.data(), v.data(), 1, {}}};
    sgd_step(params, {0.1, 0.0, 0.0});
    CHECK(p[0] == 0.9);
}

TEST_CASE("sgd: two identical runs give bit-identical params") {
    auto run = [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> p(16), g(16), v(16, 0.0);
        for (double& x : p) x = dist(rng);
        std::vector<ParamView> params = {{"p", p.data(), g.data(), v.data(), p.size(), {}}};
        for (int it = 0; it < 25; ++it) {
            for (double& x : g) x = dist(rng);
            sgd_step(params, {0.05, 0.9, 1e-4});
        }
        return p;
    };
    CHECK(run(9) == run(9));
}

TEST_CASE("sgd rejects non-finite gradients") {
    std::vector<double> p = {1.0};
    std::vector<double> g = {std::numeric_limits<double>::quiet_NaN()};
    std::vector<double> v = {0.0};
    std::vector<ParamView> params = {{"p", p.data(), g.data(), v.data(), 1, {}}};
    CHECK_THROWS_WITH_AS(sgd_step(params, {0.1, 0.0, 0.0}), doctest::Contains("p"),
                         std::runtime_error);
}

TEST_CASE("finite difference check: linear and quadratic losses") {
    std::vector<double> p = {1.0, 2.0, 3.0};
    std::vector<double> g(3), v(3, 0.0);
    std::vector<ParamView> params = {{"p", p.data(), g.data(), v.data(), 3, {}}};

    SUBCASE("linear loss sum(p): analytic ones") {
        std::fill(g.begin(), g.end(), 1.0);
        auto loss = [&]() { return p[0] + p[1] + p[2]; };
        GradCheckReport rep = finite_difference_check(loss, params, 1e-5);
        CHECK(rep.max_rel_error <= 1e-9);
        CHECK(rep.checked == 3);
    }
    SUBCASE("quadratic loss sum(p^2) at p=1: analytic 2p") {
        std::fill(p.begin(), p.end(), 1.0);
        std::fill(g.begin(), g.end(), 2.0);
        auto loss = [&]() { return p[0] * p[0] + p[1] * p[1] + p[2] * p[2]; };
        GradCheckReport rep = finite_difference_check(loss, params, 1e-5);
        CHECK(rep.max_rel_error <= 1e-6);
    }
}
