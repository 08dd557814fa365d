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

#ifndef REXNET_MODEL_HPP
#define REXNET_MODEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rexnet/image.hpp"
#include "rexnet/layers.hpp"
#include "rexnet/region.hpp"
#include "rexnet/roi_pool.hpp"
#include "rexnet/tensor.hpp"

namespace rexnet {

inline constexpr int kMaskDownsample = 16;
inline constexpr int kBranchScale = 8;
inline constexpr int kPooledSize = 7;
inline constexpr int kHeadHidden = 256;

struct ModelConfig {
    std::array<int, 4> trunk_channels{8, 16, 32, 32};
    int branch_dilation = 2;
    double lambda_edge = 0.1;
    bool deep_supervision = true;
    bool fuse_features = false;  // branch fusion over 128-ch features instead of maps
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// losses

/// Mean binary cross-entropy; predictions are clamped to [1e-7, 1-1e-7].
double cross_entropy_loss(const Plane& pred, const Plane& gt);
Plane cross_entropy_grad(const Plane& pred, const Plane& gt);

/// Half mean squared deviation of the map from its region-wise mean.
double edge_loss(const Plane& pred, const RegionMask& mask);
double edge_loss_on_labels(const Plane& pred, const std::vector<std::int32_t>& labels,
                           int region_count, Plane* grad_out = nullptr);

/// Area-average then threshold at 0.5.
Plane downsample_gt(const Plane& gt, int factor);

Plane paint_region_map(const RegionMask& mask, const std::vector<double>& region_values);

// ---------------------------------------------------------------------------

/// Shared trunk: four stages of two 3x3 convolutions + ReLU followed by a
/// 2x2 max-pool. Branches hang off the first three pool outputs and the
/// last pre-pool convolution; the RoI pooling consumes the fourth pool
/// output at 1/16 scale.
struct TrunkStage {
    ConvLayer conv_a, conv_b;
};

struct Branch {
    ConvLayer conv1, conv2, conv3;  // 3x3 dilated, 64/64/128 channels
    ConvLayer head1, head2;         // 1x1, 128/1 channels
};

struct TrunkContext {
    Tensor input;
    std::array<Tensor, 4> pre_a, act_a, pre_b, act_b;
    std::array<PoolRecord, 4> pool;
    // attachment points: pool1..pool3 outputs plus the stage-4 pre-pool
    // activation, all referenced from the arrays above
    const Tensor& attachment(int i) const { return i < 3 ? pool[i].output : act_b[3]; }
    const Tensor& roi_features() const { return pool[3].output; }
};

struct BranchContext {
    std::array<Tensor, 3> pre, act;  // conv1..conv3
    Tensor pre_h1, act_h1, pre_h2;
    Tensor map;  // sigmoid(pre_h2), 1/8 scale
};

struct RegionHeadContext {
    std::vector<PooledRegionFeature> pooled;
    std::vector<double> flat;        // rows x (C*7*7)
    std::vector<char> zero_rows;
    std::vector<double> pre_h, act_h;
    std::vector<double> logits;      // rows x 2
    std::vector<double> probs;       // rows x 2 (salient prob = column 1)
    int rows = 0;
};

struct BranchFusionContext {
    std::array<BranchContext, 4> branches;
    Tensor fusion_input;  // stacked maps, or concatenated features
    Tensor pre_fuse;
    Tensor context_map;   // sigmoid output at 1/8 scale
};

struct ContextNetResult {
    std::array<Plane, 4> branch_maps;  // 1/8 scale
    Plane context_map;                 // 1/8 scale, branch fusion output
    Plane context_map_fullres;         // upsampled by 8
};

struct PredictResult {
    Plane map_superpixel;  // region saliency over superpixel regions
    Plane map_edge;        // region saliency over edge regions
    Plane map_context;     // fused multi-scale context, full resolution
    Plane map_fused;       // final fusion of the three
    std::array<Plane, 4> branch_maps;
};

struct TrainSample {
    ColorImage image;
    Plane gt;
    RegionMask sp_mask;
    RegionMask edge_mask;
};

struct TrainOptions {
    int stage1_iterations = 2000;
    int stage2_iterations = 2000;
    SgdConfig sgd{0.02, 0.9, 5e-4};
};

struct TrainLogRow {
    int iteration = 0;
    int stage = 0;
    double region_loss = 0.0;
    double context_ce = 0.0;
    double context_edge = 0.0;
    double fusion_ce = 0.0;
    double fusion_edge = 0.0;
    double total = 0.0;
    double learning_rate = 0.0;
};

std::string train_log_csv(const std::vector<TrainLogRow>& rows);

class RexNetModel {
  public:
    explicit RexNetModel(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }

    /// Hidden layers draw from a seeded normal; every map-producing final
    /// layer starts at zero so untrained outputs sit exactly at 0.5.
    void init_params(std::uint64_t seed);

    std::vector<ParamView> params_stage1();
    std::vector<ParamView> params_stage2();
    std::vector<ParamView> params_all();

    static Tensor image_to_tensor(const ColorImage& image);

    TrunkContext trunk_forward(const Tensor& input) const;
    /// Stage-1 backward: gradient arrives through the RoI feature map.
    void trunk_backward(const TrunkContext& ctx, const Tensor& roi_feature_grad);

    RegionHeadContext region_head_forward(const Tensor& roi_features,
                                          const std::vector<RoI>& feature_rois,
                                          const DownsampledMask& ds) const;
    /// dlogits: rows x 2. Returns the gradient on the RoI feature map.
    Tensor region_head_backward(const RegionHeadContext& ctx, const Tensor& roi_features,
                                const std::vector<double>& dlogits);

    /// Region saliency pass over one mask decomposition: per-region
    /// salient probability plus the painted full-resolution map.
    std::pair<std::vector<double>, Plane> regionnet_forward(const ColorImage& image,
                                                            const RegionMask& mask) const;

    BranchContext branch_forward(int index, const Tensor& attachment) const;
    /// Returns the gradient on the attachment point (discarded by stage-2
    /// training since the trunk is frozen, used by the gradient checker).
    Tensor branch_backward(int index, const BranchContext& ctx, const Tensor& attachment,
                           const Tensor& map_grad, const Tensor* feature_grad = nullptr);

    /// All four branches plus their 1x1 fusion into the context map.
    BranchFusionContext branch_fusion_forward(const std::array<Tensor, 4>& attachments) const;
    /// context_grad lands on the fused context map; branch_map_grads carry
    /// the deep-supervision terms on the per-branch sigmoid maps.
    std::array<Tensor, 4> branch_fusion_backward(const BranchFusionContext& ctx,
                                                 const std::array<Tensor, 4>& attachments,
                                                 const Tensor& context_grad,
                                                 const std::array<Tensor, 4>* branch_map_grads);

    ContextNetResult contextnet_forward(const ColorImage& image) const;

    /// Final 1x1 fusion of the three saliency maps (Eq-style 3-channel
    /// stack -> sigmoid).
    Plane fuse_saliency(const Plane& map_sp, const Plane& map_edge,
                        const Plane& context_fullres) const;

    /// All maps for one image; trunk runs once. Input dims are padded to a
    /// multiple of 16 by replication and outputs cropped back.
    PredictResult predict(const ColorImage& image, const RegionMask& sp_mask,
                          const RegionMask& edge_mask) const;

    double deep_supervised_loss(const std::array<Plane, 4>& branch_maps, const Plane& context_map,
                                const Plane& gt, const RegionMask& edge_mask) const;

    std::vector<TrainLogRow> train_two_stage(const std::vector<TrainSample>& corpus,
                                             const TrainOptions& options);

    // checkpoint I/O over the full parameter list
    void save(const std::string& dir);
    void load(const std::string& dir);

  private:
    friend struct Stage2Workspace;
    ModelConfig cfg_;
    std::array<TrunkStage, 4> stages_;
    DenseLayer fc1_, fc2_;
    std::array<Branch, 4> branches_;
    ConvLayer fuse_branches_;
    ConvLayer fuse_final_;

    void zero_stage1_grads();
    void zero_stage2_grads();
};

}  // namespace rexnet

#endif  // REXNET_MODEL_HPP
