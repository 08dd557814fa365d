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

#include "rexnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rexnet {

namespace {

// first ow with ow*stride - pad + k*dil >= 0
int ow_lower(int stride, int pad, int tap) {
    int num = pad - tap;
    if (num <= 0) return 0;
    return (num + stride - 1) / stride;
}

// last ow (exclusive) with ow*stride - pad + k*dil <= limit-1
int ow_upper(int stride, int pad, int tap, int limit, int out_extent) {
    int num = limit - 1 - tap + pad;
    if (num < 0) return 0;
    return std::min(out_extent, num / stride + 1);
}

}  // namespace

ConvLayer::ConvLayer(int out_c, int in_c, int k_h, int k_w, int stride_, int padding_,
                     int dilation_)
    : weight(out_c, in_c, k_h, k_w),
      bias(static_cast<std::size_t>(out_c), 0.0),
      bias_grad(static_cast<std::size_t>(out_c), 0.0),
      weight_velocity(weight.size(), 0.0),
      bias_velocity(static_cast<std::size_t>(out_c), 0.0),
      stride(stride_),
      padding(padding_),
      dilation(dilation_) {
    if (stride < 1 || padding < 0 || dilation < 1) {
        throw std::invalid_argument("invalid conv hyperparameters");
    }
    weight.ensure_grad();
}

void ConvLayer::zero_grads() {
    weight.zero_grad();
    std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
}

void ConvLayer::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
    weight.ensure_grad();
    out.push_back({prefix + ".w", weight.data.data(), weight.grad.data(),
                   weight_velocity.data(), weight.size(),
                   {static_cast<std::uint32_t>(weight.n), static_cast<std::uint32_t>(weight.c),
                    static_cast<std::uint32_t>(weight.h), static_cast<std::uint32_t>(weight.w)}});
    out.push_back({prefix + ".b", bias.data(), bias_grad.data(), bias_velocity.data(),
                   bias.size(), {static_cast<std::uint32_t>(bias.size())}});
}

int conv_out_extent(int in, int kernel, int stride, int padding, int dilation) {
    int eff = dilation * (kernel - 1) + 1;
    int padded = in + 2 * padding;
    if (eff > padded) {
        throw std::invalid_argument("kernel extent " + std::to_string(eff) +
                                    " exceeds padded input extent " + std::to_string(padded));
    }
    return (padded - eff) / stride + 1;
}

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer) {
    if (input.c != layer.in_channels()) {
        throw std::invalid_argument("conv input channels " + input.shape_str() +
                                    " do not match layer weights " + layer.weight.shape_str());
    }
    const int kh = layer.weight.h, kw = layer.weight.w;
    const int s = layer.stride, p = layer.padding, d = layer.dilation;
    const int oh_n = conv_out_extent(input.h, kh, s, p, d);
    const int ow_n = conv_out_extent(input.w, kw, s, p, d);
    Tensor out(input.n, layer.out_channels(), oh_n, ow_n);

    for (int in = 0; in < input.n; ++in) {
#pragma omp parallel for schedule(static)
        for (int oc = 0; oc < out.c; ++oc) {
            double* oplane = out.plane(in, oc);
            std::fill(oplane, oplane + static_cast<std::size_t>(oh_n) * ow_n, layer.bias[oc]);
            for (int ic = 0; ic < input.c; ++ic) {
                const double* iplane = input.plane(in, ic);
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const double wv = layer.weight.at(oc, ic, ky, kx);
                        const int tapx = kx * d;
                        const int lo = ow_lower(s, p, tapx);
                        const int hi = ow_upper(s, p, tapx, input.w, ow_n);
                        for (int oy = 0; oy < oh_n; ++oy) {
                            const int iy = oy * s - p + ky * d;
                            if (iy < 0 || iy >= input.h) continue;
                            const double* irow = iplane + static_cast<std::size_t>(iy) * input.w;
                            double* orow = oplane + static_cast<std::size_t>(oy) * ow_n;
                            if (s == 1) {
                                const double* ip = irow - p + tapx;
                                for (int ox = lo; ox < hi; ++ox) orow[ox] += wv * ip[ox];
                            } else {
                                for (int ox = lo; ox < hi; ++ox) {
                                    orow[ox] += wv * irow[ox * s - p + tapx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor conv2d_backward(const Tensor& input, ConvLayer& layer, const Tensor& upstream,
                       bool want_input_grad) {
    const int kh = layer.weight.h, kw = layer.weight.w;
    const int s = layer.stride, p = layer.padding, d = layer.dilation;
    const int oh_n = conv_out_extent(input.h, kh, s, p, d);
    const int ow_n = conv_out_extent(input.w, kw, s, p, d);
    if (upstream.n != input.n || upstream.c != layer.out_channels() || upstream.h != oh_n ||
        upstream.w != ow_n) {
        throw std::invalid_argument("conv upstream shape " + upstream.shape_str() +
                                    " does not match forward output (" +
                                    std::to_string(input.n) + "," +
                                    std::to_string(layer.out_channels()) + "," +
                                    std::to_string(oh_n) + "," + std::to_string(ow_n) + ")");
    }
    layer.weight.ensure_grad();

    // bias and weight gradients
    for (int in = 0; in < input.n; ++in) {
#pragma omp parallel for schedule(static)
        for (int oc = 0; oc < upstream.c; ++oc) {
            const double* uplane = upstream.plane(in, oc);
            double bacc = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(oh_n) * ow_n; ++i) {
                bacc += uplane[i];
            }
            layer.bias_grad[oc] += bacc;
            for (int ic = 0; ic < input.c; ++ic) {
                const double* iplane = input.plane(in, ic);
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const int tapx = kx * d;
                        const int lo = ow_lower(s, p, tapx);
                        const int hi = ow_upper(s, p, tapx, input.w, ow_n);
                        double acc = 0.0;
                        for (int oy = 0; oy < oh_n; ++oy) {
                            const int iy = oy * s - p + ky * d;
                            if (iy < 0 || iy >= input.h) continue;
                            const double* irow = iplane + static_cast<std::size_t>(iy) * input.w;
                            const double* urow = uplane + static_cast<std::size_t>(oy) * ow_n;
                            if (s == 1) {
                                const double* ip = irow - p + tapx;
                                for (int ox = lo; ox < hi; ++ox) acc += urow[ox] * ip[ox];
                            } else {
                                for (int ox = lo; ox < hi; ++ox) {
                                    acc += urow[ox] * irow[ox * s - p + tapx];
                                }
                            }
                        }
                        layer.weight.grad[layer.weight.index(oc, ic, ky, kx)] += acc;
                    }
                }
            }
        }
    }

    Tensor input_grad;
    if (want_input_grad) {
        input_grad = Tensor(input.n, input.c, input.h, input.w);
        for (int in = 0; in < input.n; ++in) {
#pragma omp parallel for schedule(static)
            for (int ic = 0; ic < input.c; ++ic) {
                double* gplane = input_grad.plane(in, ic);
                for (int oc = 0; oc < upstream.c; ++oc) {
                    const double* uplane = upstream.plane(in, oc);
                    for (int ky = 0; ky < kh; ++ky) {
                        for (int kx = 0; kx < kw; ++kx) {
                            const double wv = layer.weight.at(oc, ic, ky, kx);
                            const int tapx = kx * d;
                            const int lo = ow_lower(s, p, tapx);
                            const int hi = ow_upper(s, p, tapx, input.w, ow_n);
                            for (int oy = 0; oy < oh_n; ++oy) {
                                const int iy = oy * s - p + ky * d;
                                if (iy < 0 || iy >= input.h) continue;
                                double* grow = gplane + static_cast<std::size_t>(iy) * input.w;
                                const double* urow =
                                    uplane + static_cast<std::size_t>(oy) * ow_n;
                                if (s == 1) {
                                    double* gp = grow - p + tapx;
                                    for (int ox = lo; ox < hi; ++ox) gp[ox] += wv * urow[ox];
                                } else {
                                    for (int ox = lo; ox < hi; ++ox) {
                                        grow[ox * s - p + tapx] += wv * urow[ox];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return input_grad;
}

DenseLayer::DenseLayer(int out, int in)
    : in_dim(in),
      out_dim(out),
      weight(static_cast<std::size_t>(out) * in, 0.0),
      bias(static_cast<std::size_t>(out), 0.0),
      weight_grad(weight.size(), 0.0),
      bias_grad(bias.size(), 0.0),
      weight_velocity(weight.size(), 0.0),
      bias_velocity(bias.size(), 0.0) {}

void DenseLayer::zero_grads() {
    std::fill(weight_grad.begin(), weight_grad.end(), 0.0);
    std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
}

void DenseLayer::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
    out.push_back({prefix + ".w", weight.data(), weight_grad.data(), weight_velocity.data(),
                   weight.size(),
                   {static_cast<std::uint32_t>(out_dim), static_cast<std::uint32_t>(in_dim)}});
    out.push_back({prefix + ".b", bias.data(), bias_grad.data(), bias_velocity.data(),
                   bias.size(), {static_cast<std::uint32_t>(out_dim)}});
}

std::vector<double> dense_forward(const DenseLayer& layer, const std::vector<double>& input,
                                  int rows, const std::vector<char>* zero_rows) {
    if (input.size() != static_cast<std::size_t>(rows) * layer.in_dim) {
        throw std::invalid_argument("dense input size mismatch");
    }
    std::vector<double> out(static_cast<std::size_t>(rows) * layer.out_dim);
    const int in_dim = layer.in_dim;
    for (int o = 0; o < layer.out_dim; ++o) {
        const double* wrow = layer.weight.data() + static_cast<std::size_t>(o) * in_dim;
        const double b = layer.bias[o];
        for (int r = 0; r < rows; ++r) {
            if (zero_rows && (*zero_rows)[r]) {
                out[static_cast<std::size_t>(r) * layer.out_dim + o] = b;
                continue;
            }
            const double* x = input.data() + static_cast<std::size_t>(r) * in_dim;
            double acc = b;
            for (int i = 0; i < in_dim; ++i) acc += wrow[i] * x[i];
            out[static_cast<std::size_t>(r) * layer.out_dim + o] = acc;
        }
    }
    return out;
}

std::vector<double> dense_backward(DenseLayer& layer, const std::vector<double>& input, int rows,
                                   const std::vector<double>& upstream,
                                   const std::vector<char>* zero_rows) {
    if (upstream.size() != static_cast<std::size_t>(rows) * layer.out_dim) {
        throw std::invalid_argument("dense upstream size mismatch");
    }
    const int in_dim = layer.in_dim;
    std::vector<double> input_grad(input.size(), 0.0);
    for (int o = 0; o < layer.out_dim; ++o) {
        double* wgrow = layer.weight_grad.data() + static_cast<std::size_t>(o) * in_dim;
        const double* wrow = layer.weight.data() + static_cast<std::size_t>(o) * in_dim;
        double bacc = 0.0;
        for (int r = 0; r < rows; ++r) {
            const double g = upstream[static_cast<std::size_t>(r) * layer.out_dim + o];
            bacc += g;
            if (g == 0.0) continue;
            double* xg = input_grad.data() + static_cast<std::size_t>(r) * in_dim;
            for (int i = 0; i < in_dim; ++i) xg[i] += g * wrow[i];
            if (zero_rows && (*zero_rows)[r]) continue;  // x == 0 contributes nothing to wgrad
            const double* x = input.data() + static_cast<std::size_t>(r) * in_dim;
            for (int i = 0; i < in_dim; ++i) wgrow[i] += g * x[i];
        }
        layer.bias_grad[o] += bacc;
    }
    return input_grad;
}

Tensor pad_to_even(const Tensor& input) {
    if (input.h % 2 == 0 && input.w % 2 == 0) return input;
    const int nh = input.h + (input.h % 2);
    const int nw = input.w + (input.w % 2);
    Tensor out(input.n, input.c, nh, nw);
    for (int in = 0; in < input.n; ++in) {
        for (int ic = 0; ic < input.c; ++ic) {
            for (int y = 0; y < nh; ++y) {
                const int sy = std::min(y, input.h - 1);
                for (int x = 0; x < nw; ++x) {
                    out.at(in, ic, y, x) = input.at(in, ic, sy, std::min(x, input.w - 1));
                }
            }
        }
    }
    return out;
}

PoolRecord maxpool2x2_forward(const Tensor& input) {
    if (input.h % 2 != 0 || input.w % 2 != 0) {
        throw std::invalid_argument("maxpool2x2 requires even spatial dims, got " +
                                    input.shape_str() + "; pad_to_even first");
    }
    PoolRecord rec;
    rec.output = Tensor(input.n, input.c, input.h / 2, input.w / 2);
    rec.argmax.assign(rec.output.size(), kEmptyArgmax);
    for (int in = 0; in < input.n; ++in) {
        for (int ic = 0; ic < input.c; ++ic) {
            for (int oy = 0; oy < rec.output.h; ++oy) {
                for (int ox = 0; ox < rec.output.w; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::int64_t best_idx = kEmptyArgmax;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t idx =
                                input.index(in, ic, 2 * oy + dy, 2 * ox + dx);
                            // ties keep the first (row-major) index
                            if (input.data[idx] > best) {
                                best = input.data[idx];
                                best_idx = static_cast<std::int64_t>(idx);
                            }
                        }
                    }
                    const std::size_t oidx = rec.output.index(in, ic, oy, ox);
                    rec.output.data[oidx] = best;
                    rec.argmax[oidx] = best_idx;
                }
            }
        }
    }
    return rec;
}

Tensor maxpool2x2_backward(const PoolRecord& record, const Tensor& input_shape_ref,
                           const Tensor& upstream) {
    if (!upstream.same_shape(record.output)) {
        throw std::invalid_argument("maxpool upstream shape " + upstream.shape_str() +
                                    " does not match pooled output " +
                                    record.output.shape_str());
    }
    Tensor grad(input_shape_ref.n, input_shape_ref.c, input_shape_ref.h, input_shape_ref.w);
    for (std::size_t i = 0; i < record.argmax.size(); ++i) {
        const std::int64_t src = record.argmax[i];
        if (src == kEmptyArgmax) continue;
        grad.data[static_cast<std::size_t>(src)] += upstream.data[i];
    }
    return grad;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
    Tensor grad = upstream;
    for (std::size_t i = 0; i < grad.data.size(); ++i) {
        if (input.data[i] <= 0.0) grad.data[i] = 0.0;
    }
    return grad;
}

Tensor sigmoid_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

Tensor sigmoid_backward(const Tensor& output, const Tensor& upstream) {
    Tensor grad = upstream;
    for (std::size_t i = 0; i < grad.data.size(); ++i) {
        const double y = output.data[i];
        grad.data[i] *= y * (1.0 - y);
    }
    return grad;
}

Tensor softmax2_forward(const Tensor& logits) {
    if (logits.c != 2) {
        throw std::invalid_argument("softmax2 requires exactly two channels, got " +
                                    logits.shape_str());
    }
    Tensor out = logits;
    for (int in = 0; in < logits.n; ++in) {
        for (int y = 0; y < logits.h; ++y) {
            for (int x = 0; x < logits.w; ++x) {
                const double z0 = logits.at(in, 0, y, x);
                const double z1 = logits.at(in, 1, y, x);
                const double m = std::max(z0, z1);
                const double e0 = std::exp(z0 - m);
                const double e1 = std::exp(z1 - m);
                const double s = e0 + e1;
                out.at(in, 0, y, x) = e0 / s;
                out.at(in, 1, y, x) = e1 / s;
            }
        }
    }
    return out;
}

Tensor softmax2_backward(const Tensor& probs, const Tensor& upstream) {
    if (!probs.same_shape(upstream)) {
        throw std::invalid_argument("softmax2 upstream shape mismatch");
    }
    Tensor grad = probs;
    for (int in = 0; in < probs.n; ++in) {
        for (int y = 0; y < probs.h; ++y) {
            for (int x = 0; x < probs.w; ++x) {
                const double p0 = probs.at(in, 0, y, x);
                const double p1 = probs.at(in, 1, y, x);
                const double g0 = upstream.at(in, 0, y, x);
                const double g1 = upstream.at(in, 1, y, x);
                const double dot = g0 * p0 + g1 * p1;
                grad.at(in, 0, y, x) = p0 * (g0 - dot);
                grad.at(in, 1, y, x) = p1 * (g1 - dot);
            }
        }
    }
    return grad;
}

namespace {

struct LerpTap {
    int i0, i1;
    double w0, w1;
};

std::vector<LerpTap> lerp_taps(int out_extent, int in_extent, int factor) {
    std::vector<LerpTap> taps(out_extent);
    for (int o = 0; o < out_extent; ++o) {
        const double src = (o + 0.5) / factor - 0.5;
        int i0 = static_cast<int>(std::floor(src));
        const double frac = src - i0;
        int i1 = i0 + 1;
        i0 = std::clamp(i0, 0, in_extent - 1);
        i1 = std::clamp(i1, 0, in_extent - 1);
        taps[o] = {i0, i1, 1.0 - frac, frac};
    }
    return taps;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& input, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
    if (factor == 1) return input;
    Tensor out(input.n, input.c, input.h * factor, input.w * factor);
    const auto ty = lerp_taps(out.h, input.h, factor);
    const auto tx = lerp_taps(out.w, input.w, factor);
    for (int in = 0; in < input.n; ++in) {
        for (int ic = 0; ic < input.c; ++ic) {
            const double* ip = input.plane(in, ic);
            double* op = out.plane(in, ic);
            for (int oy = 0; oy < out.h; ++oy) {
                const LerpTap& y = ty[oy];
                const double* r0 = ip + static_cast<std::size_t>(y.i0) * input.w;
                const double* r1 = ip + static_cast<std::size_t>(y.i1) * input.w;
                double* orow = op + static_cast<std::size_t>(oy) * out.w;
                for (int ox = 0; ox < out.w; ++ox) {
                    const LerpTap& x = tx[ox];
                    orow[ox] = y.w0 * (x.w0 * r0[x.i0] + x.w1 * r0[x.i1]) +
                               y.w1 * (x.w0 * r1[x.i0] + x.w1 * r1[x.i1]);
                }
            }
        }
    }
    return out;
}

Tensor bilinear_upsample_backward(const Tensor& input_shape_ref, int factor,
                                  const Tensor& upstream) {
    if (factor == 1) return upstream;
    Tensor grad(input_shape_ref.n, input_shape_ref.c, input_shape_ref.h, input_shape_ref.w);
    const auto ty = lerp_taps(upstream.h, grad.h, factor);
    const auto tx = lerp_taps(upstream.w, grad.w, factor);
    for (int in = 0; in < grad.n; ++in) {
        for (int ic = 0; ic < grad.c; ++ic) {
            const double* up = upstream.plane(in, ic);
            double* gp = grad.plane(in, ic);
            for (int oy = 0; oy < upstream.h; ++oy) {
                const LerpTap& y = ty[oy];
                double* r0 = gp + static_cast<std::size_t>(y.i0) * grad.w;
                double* r1 = gp + static_cast<std::size_t>(y.i1) * grad.w;
                const double* urow = up + static_cast<std::size_t>(oy) * upstream.w;
                for (int ox = 0; ox < upstream.w; ++ox) {
                    const LerpTap& x = tx[ox];
                    const double g = urow[ox];
                    r0[x.i0] += y.w0 * x.w0 * g;
                    r0[x.i1] += y.w0 * x.w1 * g;
                    r1[x.i0] += y.w1 * x.w0 * g;
                    r1[x.i1] += y.w1 * x.w1 * g;
                }
            }
        }
    }
    return grad;
}

void sgd_step(std::vector<ParamView>& params, const SgdConfig& cfg) {
    for (ParamView& pv : params) {
        for (std::size_t i = 0; i < pv.count; ++i) {
            const double g = pv.grad[i];
            if (!std::isfinite(g)) {
                throw std::runtime_error("non-finite gradient in parameter '" + pv.name +
                                         "' at index " + std::to_string(i));
            }
            const double v = cfg.momentum * pv.velocity[i] + (g + cfg.weight_decay * pv.value[i]);
            pv.velocity[i] = v;
            pv.value[i] -= cfg.learning_rate * v;
        }
    }
}

GradCheckReport finite_difference_check(const std::function<double()>& loss_fn,
                                        std::vector<ParamView>& params, double step,
                                        std::size_t max_coords_per_param,
                                        std::uint64_t sample_seed) {
    GradCheckReport report;
    std::mt19937_64 rng(sample_seed);
    for (ParamView& pv : params) {
        std::vector<std::size_t> coords;
        if (pv.count <= max_coords_per_param) {
            coords.resize(pv.count);
            for (std::size_t i = 0; i < pv.count; ++i) coords[i] = i;
        } else {
            std::uniform_int_distribution<std::size_t> dist(0, pv.count - 1);
            for (std::size_t k = 0; k < max_coords_per_param; ++k) coords.push_back(dist(rng));
        }
        for (std::size_t idx : coords) {
            const double saved = pv.value[idx];
            pv.value[idx] = saved + step;
            const double up = loss_fn();
            pv.value[idx] = saved - step;
            const double down = loss_fn();
            pv.value[idx] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = pv.grad[idx];
            const double denom = std::max({std::abs(analytic) + std::abs(numeric), 1e-6});
            const double rel = std::abs(analytic - numeric) / denom;
            ++report.checked;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = pv.name;
                report.worst_index = idx;
                report.analytic = analytic;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace rexnet
