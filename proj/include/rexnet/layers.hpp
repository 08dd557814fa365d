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

#ifndef REXNET_LAYERS_HPP
#define REXNET_LAYERS_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rexnet/tensor.hpp"

namespace rexnet {

/// A named view over one trainable buffer plus its gradient and SGD
/// velocity. Layers expose their parameters through these; the optimizer,
/// the checkpoint writer and the gradient checker all work on views.
struct ParamView {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    double* velocity = nullptr;
    std::size_t count = 0;
    std::vector<std::uint32_t> dims;
};

/// 2-D convolution with stride, zero padding and dilation.
struct ConvLayer {
    Tensor weight;  // (outC, inC, kH, kW)
    std::vector<double> bias;
    std::vector<double> bias_grad;
    std::vector<double> weight_velocity;
    std::vector<double> bias_velocity;
    int stride = 1;
    int padding = 0;
    int dilation = 1;

    ConvLayer() = default;
    ConvLayer(int out_c, int in_c, int k_h, int k_w, int stride_, int padding_, int dilation_);

    int out_channels() const { return weight.n; }
    int in_channels() const { return weight.c; }

    void zero_grads();
    void collect_params(const std::string& prefix, std::vector<ParamView>& out);
};

int conv_out_extent(int in, int kernel, int stride, int padding, int dilation);

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer);
/// Accumulates weight/bias gradients into `layer` and returns the gradient
/// with respect to `input`. Pass want_input_grad = false at attachment
/// points whose upstream parameters are frozen.
Tensor conv2d_backward(const Tensor& input, ConvLayer& layer, const Tensor& upstream,
                       bool want_input_grad = true);

/// Fully connected layer over flattened per-row inputs (rows = batch).
struct DenseLayer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> weight;  // (out, in) row-major
    std::vector<double> bias;
    std::vector<double> weight_grad;
    std::vector<double> bias_grad;
    std::vector<double> weight_velocity;
    std::vector<double> bias_velocity;

    DenseLayer() = default;
    DenseLayer(int out, int in);

    void zero_grads();
    void collect_params(const std::string& prefix, std::vector<ParamView>& out);
};

/// rows×in -> rows×out. `skip_row` marks rows that are identically zero
/// (vanished-region features); their weight-gradient terms are skipped,
/// which is exact.
std::vector<double> dense_forward(const DenseLayer& layer, const std::vector<double>& input,
                                  int rows, const std::vector<char>* zero_rows = nullptr);
std::vector<double> dense_backward(DenseLayer& layer, const std::vector<double>& input, int rows,
                                   const std::vector<double>& upstream,
                                   const std::vector<char>* zero_rows = nullptr);

/// Max pooling 2x2/stride 2 with recorded argmax so backward is exact.
/// Sentinel kEmptyArgmax marks cells with no source (unused by 2x2 pooling
/// itself, shared with the mask-based RoI pooling record convention).
inline constexpr std::int64_t kEmptyArgmax = -1;

struct PoolRecord {
    Tensor output;
    std::vector<std::int64_t> argmax;  // flat index into the pooled input
};

PoolRecord maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const PoolRecord& record, const Tensor& input_shape_ref,
                           const Tensor& upstream);

/// Replication-pads the bottom/right edge so both spatial dims are even.
Tensor pad_to_even(const Tensor& input);

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

Tensor sigmoid_forward(const Tensor& input);
/// `output` is the sigmoid forward result.
Tensor sigmoid_backward(const Tensor& output, const Tensor& upstream);

/// Two-class softmax across the channel axis (requires c == 2).
Tensor softmax2_forward(const Tensor& logits);
Tensor softmax2_backward(const Tensor& probs, const Tensor& upstream);

/// Bilinear upsampling by an integer factor, corner alignment off.
Tensor bilinear_upsample(const Tensor& input, int factor);
Tensor bilinear_upsample_backward(const Tensor& input_shape_ref, int factor,
                                  const Tensor& upstream);

struct SgdConfig {
    double learning_rate = 0.0;
    double momentum = 0.0;
    double weight_decay = 0.0;
};

/// v <- momentum*v + (g + wd*p); p <- p - lr*v. Throws on non-finite
/// gradients so training can abort with the last checkpoint retained.
void sgd_step(std::vector<ParamView>& params, const SgdConfig& cfg);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
};

/// Central-difference comparison of analytic gradients (already stored in
/// the views' grad buffers) against a pure loss function. For large
/// tensors a deterministic sample of `max_coords_per_param` coordinates is
/// probed.
GradCheckReport finite_difference_check(const std::function<double()>& loss_fn,
                                        std::vector<ParamView>& params, double step,
                                        std::size_t max_coords_per_param = 25,
                                        std::uint64_t sample_seed = 7);

}  // namespace rexnet

#endif  // REXNET_LAYERS_HPP
