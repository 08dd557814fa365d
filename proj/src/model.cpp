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

#include "rexnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rexnet/checkpoint.hpp"

namespace rexnet {

namespace {

constexpr double kClampEps = 1e-7;
constexpr int kBranchStrides[4] = {4, 2, 1, 1};

Tensor tensor_from_plane(const Plane& p) {
    Tensor t(1, 1, p.h, p.w);
    t.data = p.v;
    return t;
}

Plane plane_from_tensor(const Tensor& t, int n = 0, int c = 0) {
    Plane p(t.h, t.w);
    const double* src = t.plane(n, c);
    std::copy(src, src + p.size(), p.v.begin());
    return p;
}

Tensor stack_planes(const std::vector<const Plane*>& planes) {
    Tensor t(1, static_cast<int>(planes.size()), planes[0]->h, planes[0]->w);
    for (std::size_t c = 0; c < planes.size(); ++c) {
        if (planes[c]->h != t.h || planes[c]->w != t.w) {
            throw std::invalid_argument("fusion inputs have mismatched dims");
        }
        std::copy(planes[c]->v.begin(), planes[c]->v.end(),
                  t.data.begin() + c * planes[0]->size());
    }
    return t;
}

RegionMask pad_mask(const RegionMask& mask, int multiple) {
    const int nh = ((mask.h + multiple - 1) / multiple) * multiple;
    const int nw = ((mask.w + multiple - 1) / multiple) * multiple;
    if (nh == mask.h && nw == mask.w) return mask;
    RegionMask out(nh, nw);
    out.region_count = mask.region_count;
    for (int y = 0; y < nh; ++y) {
        const int sy = std::min(y, mask.h - 1);
        for (int x = 0; x < nw; ++x) out.at(y, x) = mask.at(sy, std::min(x, mask.w - 1));
    }
    return out;
}

void softmax_rows(const std::vector<double>& logits, int rows, std::vector<double>& probs) {
    probs.resize(logits.size());
    for (int r = 0; r < rows; ++r) {
        const double z0 = logits[2 * r], z1 = logits[2 * r + 1];
        const double m = std::max(z0, z1);
        const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
        probs[2 * r] = e0 / (e0 + e1);
        probs[2 * r + 1] = e1 / (e0 + e1);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// losses

double cross_entropy_loss(const Plane& pred, const Plane& gt) {
    if (pred.h != gt.h || pred.w != gt.w) {
        throw std::invalid_argument("cross_entropy_loss: dims differ");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double p = std::clamp(pred.v[i], kClampEps, 1.0 - kClampEps);
        acc -= gt.v[i] != 0.0 ? std::log(p) : std::log(1.0 - p);
    }
    return acc / static_cast<double>(pred.v.size());
}

Plane cross_entropy_grad(const Plane& pred, const Plane& gt) {
    Plane grad(pred.h, pred.w);
    const double inv = 1.0 / static_cast<double>(pred.v.size());
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double raw = pred.v[i];
        if (raw <= kClampEps || raw >= 1.0 - kClampEps) {
            grad.v[i] = 0.0;  // inside the clamp the loss is locally flat
            continue;
        }
        grad.v[i] = (gt.v[i] != 0.0 ? -1.0 / raw : 1.0 / (1.0 - raw)) * inv;
    }
    return grad;
}

double edge_loss_on_labels(const Plane& pred, const std::vector<std::int32_t>& labels,
                           int region_count, Plane* grad_out) {
    if (labels.size() != pred.v.size()) {
        throw std::invalid_argument("edge_loss: label grid does not match prediction dims");
    }
    std::vector<double> sum(region_count, 0.0);
    std::vector<std::int64_t> cnt(region_count, 0);
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        sum[labels[i]] += pred.v[i];
        ++cnt[labels[i]];
    }
    std::vector<double> mean(region_count, 0.0);
    for (int r = 0; r < region_count; ++r) {
        if (cnt[r] > 0) mean[r] = sum[r] / static_cast<double>(cnt[r]);
    }
    const double inv = 1.0 / static_cast<double>(pred.v.size());
    double loss = 0.0;
    if (grad_out) *grad_out = Plane(pred.h, pred.w);
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double dev = pred.v[i] - mean[labels[i]];
        loss += dev * dev;
        if (grad_out) grad_out->v[i] = dev * inv;
    }
    return 0.5 * loss * inv;
}

double edge_loss(const Plane& pred, const RegionMask& mask) {
    return edge_loss_on_labels(pred, resample_labels_nn(mask, pred.h, pred.w),
                               mask.region_count, nullptr);
}

Plane downsample_gt(const Plane& gt, int factor) {
    if (gt.h % factor != 0 || gt.w % factor != 0) {
        throw std::invalid_argument("downsample_gt: dims not divisible by factor");
    }
    Plane out(gt.h / factor, gt.w / factor);
    const double cells = static_cast<double>(factor) * factor;
    for (int y = 0; y < out.h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            double acc = 0.0;
            for (int dy = 0; dy < factor; ++dy) {
                for (int dx = 0; dx < factor; ++dx) acc += gt.at(y * factor + dy, x * factor + dx);
            }
            out.at(y, x) = acc / cells >= 0.5 ? 1.0 : 0.0;
        }
    }
    return out;
}

Plane paint_region_map(const RegionMask& mask, const std::vector<double>& region_values) {
    if (static_cast<int>(region_values.size()) != mask.region_count) {
        throw std::invalid_argument("paint_region_map: value count does not match regions");
    }
    Plane out(mask.h, mask.w);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = region_values[mask.labels[i]];
    return out;
}

// ---------------------------------------------------------------------------
// model

RexNetModel::RexNetModel(const ModelConfig& cfg) : cfg_(cfg) {
    const auto& ch = cfg_.trunk_channels;
    int in_c = 3;
    for (int s = 0; s < 4; ++s) {
        stages_[s].conv_a = ConvLayer(ch[s], in_c, 3, 3, 1, 1, 1);
        stages_[s].conv_b = ConvLayer(ch[s], ch[s], 3, 3, 1, 1, 1);
        in_c = ch[s];
    }
    fc1_ = DenseLayer(kHeadHidden, ch[3] * kPooledSize * kPooledSize);
    fc2_ = DenseLayer(2, kHeadHidden);
    const int attach_ch[4] = {ch[0], ch[1], ch[2], ch[3]};
    const int d = cfg_.branch_dilation;
    for (int b = 0; b < 4; ++b) {
        branches_[b].conv1 = ConvLayer(64, attach_ch[b], 3, 3, kBranchStrides[b], d, d);
        branches_[b].conv2 = ConvLayer(64, 64, 3, 3, 1, d, d);
        branches_[b].conv3 = ConvLayer(128, 64, 3, 3, 1, d, d);
        branches_[b].head1 = ConvLayer(128, 128, 1, 1, 1, 0, 1);
        branches_[b].head2 = ConvLayer(1, 128, 1, 1, 1, 0, 1);
    }
    fuse_branches_ = ConvLayer(1, cfg_.fuse_features ? 4 * 128 : 4, 1, 1, 1, 0, 1);
    fuse_final_ = ConvLayer(1, 3, 1, 1, 1, 0, 1);
    init_params(cfg_.seed);
}

void RexNetModel::init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto fill_conv = [&rng](ConvLayer& layer) {
        const double fan_in = static_cast<double>(layer.weight.c) * layer.weight.h *
                              layer.weight.w;
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (double& v : layer.weight.data) v = dist(rng);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
        std::fill(layer.weight_velocity.begin(), layer.weight_velocity.end(), 0.0);
        std::fill(layer.bias_velocity.begin(), layer.bias_velocity.end(), 0.0);
    };
    auto zero_conv = [](ConvLayer& layer) {
        std::fill(layer.weight.data.begin(), layer.weight.data.end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
        std::fill(layer.weight_velocity.begin(), layer.weight_velocity.end(), 0.0);
        std::fill(layer.bias_velocity.begin(), layer.bias_velocity.end(), 0.0);
    };
    for (TrunkStage& s : stages_) {
        fill_conv(s.conv_a);
        fill_conv(s.conv_b);
    }
    {
        std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / fc1_.in_dim));
        for (double& v : fc1_.weight) v = dist(rng);
        std::fill(fc1_.bias.begin(), fc1_.bias.end(), 0.0);
        std::fill(fc2_.weight.begin(), fc2_.weight.end(), 0.0);
        std::fill(fc2_.bias.begin(), fc2_.bias.end(), 0.0);
        std::fill(fc1_.weight_velocity.begin(), fc1_.weight_velocity.end(), 0.0);
        std::fill(fc1_.bias_velocity.begin(), fc1_.bias_velocity.end(), 0.0);
        std::fill(fc2_.weight_velocity.begin(), fc2_.weight_velocity.end(), 0.0);
        std::fill(fc2_.bias_velocity.begin(), fc2_.bias_velocity.end(), 0.0);
    }
    for (Branch& b : branches_) {
        fill_conv(b.conv1);
        fill_conv(b.conv2);
        fill_conv(b.conv3);
        fill_conv(b.head1);
        zero_conv(b.head2);  // untrained branch maps sit exactly at 0.5
    }
    zero_conv(fuse_branches_);
    zero_conv(fuse_final_);
}

std::vector<ParamView> RexNetModel::params_stage1() {
    std::vector<ParamView> out;
    for (int s = 0; s < 4; ++s) {
        stages_[s].conv_a.collect_params("trunk.s" + std::to_string(s) + ".a", out);
        stages_[s].conv_b.collect_params("trunk.s" + std::to_string(s) + ".b", out);
    }
    fc1_.collect_params("head.fc1", out);
    fc2_.collect_params("head.fc2", out);
    return out;
}

std::vector<ParamView> RexNetModel::params_stage2() {
    std::vector<ParamView> out;
    for (int b = 0; b < 4; ++b) {
        const std::string p = "branch" + std::to_string(b);
        branches_[b].conv1.collect_params(p + ".c1", out);
        branches_[b].conv2.collect_params(p + ".c2", out);
        branches_[b].conv3.collect_params(p + ".c3", out);
        branches_[b].head1.collect_params(p + ".h1", out);
        branches_[b].head2.collect_params(p + ".h2", out);
    }
    fuse_branches_.collect_params("fuse.branches", out);
    fuse_final_.collect_params("fuse.final", out);
    return out;
}

std::vector<ParamView> RexNetModel::params_all() {
    std::vector<ParamView> out = params_stage1();
    std::vector<ParamView> s2 = params_stage2();
    out.insert(out.end(), s2.begin(), s2.end());
    return out;
}

void RexNetModel::zero_stage1_grads() {
    for (TrunkStage& s : stages_) {
        s.conv_a.zero_grads();
        s.conv_b.zero_grads();
    }
    fc1_.zero_grads();
    fc2_.zero_grads();
}

void RexNetModel::zero_stage2_grads() {
    for (Branch& b : branches_) {
        b.conv1.zero_grads();
        b.conv2.zero_grads();
        b.conv3.zero_grads();
        b.head1.zero_grads();
        b.head2.zero_grads();
    }
    fuse_branches_.zero_grads();
    fuse_final_.zero_grads();
}

Tensor RexNetModel::image_to_tensor(const ColorImage& image) {
    Tensor t(1, 3, image.h, image.w);
    for (int y = 0; y < image.h; ++y) {
        for (int x = 0; x < image.w; ++x) {
            for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = image.at(y, x, c) - 0.5;
        }
    }
    return t;
}

TrunkContext RexNetModel::trunk_forward(const Tensor& input) const {
    if (input.h % kMaskDownsample != 0 || input.w % kMaskDownsample != 0) {
        throw std::invalid_argument("trunk input dims must be divisible by 16, got " +
                                    input.shape_str());
    }
    TrunkContext ctx;
    ctx.input = input;
    const Tensor* cur = &ctx.input;
    for (int s = 0; s < 4; ++s) {
        ctx.pre_a[s] = conv2d_forward(*cur, stages_[s].conv_a);
        ctx.act_a[s] = relu_forward(ctx.pre_a[s]);
        ctx.pre_b[s] = conv2d_forward(ctx.act_a[s], stages_[s].conv_b);
        ctx.act_b[s] = relu_forward(ctx.pre_b[s]);
        ctx.pool[s] = maxpool2x2_forward(ctx.act_b[s]);
        cur = &ctx.pool[s].output;
    }
    return ctx;
}

void RexNetModel::trunk_backward(const TrunkContext& ctx, const Tensor& roi_feature_grad) {
    Tensor g = roi_feature_grad;
    for (int s = 3; s >= 0; --s) {
        g = maxpool2x2_backward(ctx.pool[s], ctx.act_b[s], g);
        g = relu_backward(ctx.pre_b[s], g);
        g = conv2d_backward(ctx.act_a[s], stages_[s].conv_b, g);
        g = relu_backward(ctx.pre_a[s], g);
        const Tensor& below = s == 0 ? ctx.input : ctx.pool[s - 1].output;
        g = conv2d_backward(below, stages_[s].conv_a, g, s != 0);
    }
}

RegionHeadContext RexNetModel::region_head_forward(const Tensor& roi_features,
                                                   const std::vector<RoI>& feature_rois,
                                                   const DownsampledMask& ds) const {
    RegionHeadContext ctx;
    ctx.pooled = mask_roi_pool_forward(roi_features, feature_rois, ds, kPooledSize, kPooledSize);
    ctx.rows = static_cast<int>(ctx.pooled.size());
    if (ctx.rows == 0) throw std::invalid_argument("region head: empty region list");
    const int feat_dim = fc1_.in_dim;
    ctx.flat.resize(static_cast<std::size_t>(ctx.rows) * feat_dim);
    ctx.zero_rows.resize(ctx.rows);
    for (int r = 0; r < ctx.rows; ++r) {
        const auto& p = ctx.pooled[r];
        std::copy(p.values.begin(), p.values.end(), ctx.flat.begin() + r * feat_dim);
        ctx.zero_rows[r] = p.vanished || p.all_zero();
    }
    ctx.pre_h = dense_forward(fc1_, ctx.flat, ctx.rows, &ctx.zero_rows);
    ctx.act_h = ctx.pre_h;
    for (double& v : ctx.act_h) v = v > 0.0 ? v : 0.0;
    ctx.logits = dense_forward(fc2_, ctx.act_h, ctx.rows);
    softmax_rows(ctx.logits, ctx.rows, ctx.probs);
    return ctx;
}

Tensor RexNetModel::region_head_backward(const RegionHeadContext& ctx,
                                         const Tensor& roi_features,
                                         const std::vector<double>& dlogits) {
    std::vector<double> dact = dense_backward(fc2_, ctx.act_h, ctx.rows, dlogits);
    for (std::size_t i = 0; i < dact.size(); ++i) {
        if (ctx.pre_h[i] <= 0.0) dact[i] = 0.0;
    }
    std::vector<double> dflat = dense_backward(fc1_, ctx.flat, ctx.rows, dact, &ctx.zero_rows);
    const int feat_dim = fc1_.in_dim;
    std::vector<std::vector<double>> upstream(ctx.rows);
    for (int r = 0; r < ctx.rows; ++r) {
        upstream[r].assign(dflat.begin() + r * feat_dim, dflat.begin() + (r + 1) * feat_dim);
    }
    return mask_roi_pool_backward(roi_features, ctx.pooled, upstream);
}

std::pair<std::vector<double>, Plane> RexNetModel::regionnet_forward(
    const ColorImage& image, const RegionMask& mask) const {
    if (mask.region_count < 1) throw std::invalid_argument("regionnet: empty region list");
    const ColorImage padded = pad_replicate(image, kMaskDownsample);
    const RegionMask pmask = pad_mask(mask, kMaskDownsample);
    TrunkContext trunk = trunk_forward(image_to_tensor(padded));
    const Tensor& feats = trunk.roi_features();
    const DownsampledMask ds = downsample_mask(pmask, kMaskDownsample);
    std::vector<RoI> rois = region_rois(pmask);
    for (RoI& r : rois) r = roi_to_feature_coords(r, kMaskDownsample, feats.h, feats.w);
    RegionHeadContext head = region_head_forward(feats, rois, ds);
    std::vector<double> probs(head.rows);
    for (int r = 0; r < head.rows; ++r) probs[r] = head.probs[2 * r + 1];
    return {probs, paint_region_map(mask, probs)};
}

BranchContext RexNetModel::branch_forward(int index, const Tensor& attachment) const {
    const Branch& b = branches_[index];
    BranchContext ctx;
    ctx.pre[0] = conv2d_forward(attachment, b.conv1);
    ctx.act[0] = relu_forward(ctx.pre[0]);
    ctx.pre[1] = conv2d_forward(ctx.act[0], b.conv2);
    ctx.act[1] = relu_forward(ctx.pre[1]);
    ctx.pre[2] = conv2d_forward(ctx.act[1], b.conv3);
    ctx.act[2] = relu_forward(ctx.pre[2]);
    ctx.pre_h1 = conv2d_forward(ctx.act[2], b.head1);
    ctx.act_h1 = relu_forward(ctx.pre_h1);
    ctx.pre_h2 = conv2d_forward(ctx.act_h1, b.head2);
    ctx.map = sigmoid_forward(ctx.pre_h2);
    return ctx;
}

Tensor RexNetModel::branch_backward(int index, const BranchContext& ctx,
                                    const Tensor& attachment, const Tensor& map_grad,
                                    const Tensor* feature_grad) {
    Branch& b = branches_[index];
    Tensor g = sigmoid_backward(ctx.map, map_grad);
    g = conv2d_backward(ctx.act_h1, b.head2, g);
    g = relu_backward(ctx.pre_h1, g);
    g = conv2d_backward(ctx.act[2], b.head1, g);
    if (feature_grad) {
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += feature_grad->data[i];
    }
    g = relu_backward(ctx.pre[2], g);
    g = conv2d_backward(ctx.act[1], b.conv3, g);
    g = relu_backward(ctx.pre[1], g);
    g = conv2d_backward(ctx.act[0], b.conv2, g);
    g = relu_backward(ctx.pre[0], g);
    return conv2d_backward(attachment, b.conv1, g);
}

namespace {

struct BranchFusionContext {
    std::array<BranchContext, 4> branches;
    Tensor fusion_input;  // stacked maps or concatenated features
    Tensor pre_fuse;
    Tensor context_map;   // sigmoid, 1/8
};

}  // namespace

struct Stage2Workspace {
    RexNetModel& model;

    BranchFusionContext forward(const std::array<Tensor, 4>& attachments) const {
        BranchFusionContext ctx;
        for (int i = 0; i < 4; ++i) {
            ctx.branches[i] = model.branch_forward(i, attachments[i]);
        }
        const Tensor& m0 = ctx.branches[0].map;
        if (model.cfg_.fuse_features) {
            ctx.fusion_input = Tensor(1, 4 * 128, m0.h, m0.w);
            for (int i = 0; i < 4; ++i) {
                std::copy(ctx.branches[i].act[2].data.begin(),
                          ctx.branches[i].act[2].data.end(),
                          ctx.fusion_input.data.begin() +
                              static_cast<std::size_t>(i) * 128 * m0.h * m0.w);
            }
        } else {
            ctx.fusion_input = Tensor(1, 4, m0.h, m0.w);
            for (int i = 0; i < 4; ++i) {
                std::copy(ctx.branches[i].map.data.begin(), ctx.branches[i].map.data.end(),
                          ctx.fusion_input.data.begin() + static_cast<std::size_t>(i) * m0.h * m0.w);
            }
        }
        ctx.pre_fuse = conv2d_forward(ctx.fusion_input, model.fuse_branches_);
        ctx.context_map = sigmoid_forward(ctx.pre_fuse);
        return ctx;
    }

    /// context_grad lands on the fused map output; branch_map_grads on the
    /// per-branch sigmoid maps (deep supervision). Attachment gradients are
    /// returned for the gradient checker.
    std::array<Tensor, 4> backward(const BranchFusionContext& ctx,
                                   const std::array<Tensor, 4>& attachments,
                                   const Tensor& context_grad,
                                   const std::array<Tensor, 4>* branch_map_grads) const {
        Tensor g = sigmoid_backward(ctx.context_map, context_grad);
        Tensor dinput = conv2d_backward(ctx.fusion_input, model.fuse_branches_, g);
        std::array<Tensor, 4> attach_grads;
        const int plane = ctx.context_map.h * ctx.context_map.w;
        for (int i = 0; i < 4; ++i) {
            if (model.cfg_.fuse_features) {
                Tensor fgrad(1, 128, ctx.context_map.h, ctx.context_map.w);
                std::copy(dinput.data.begin() + static_cast<std::size_t>(i) * 128 * plane,
                          dinput.data.begin() + static_cast<std::size_t>(i + 1) * 128 * plane,
                          fgrad.data.begin());
                Tensor mgrad(1, 1, ctx.context_map.h, ctx.context_map.w);
                if (branch_map_grads) mgrad = (*branch_map_grads)[i];
                attach_grads[i] =
                    model.branch_backward(i, ctx.branches[i], attachments[i], mgrad, &fgrad);
            } else {
                Tensor mgrad(1, 1, ctx.context_map.h, ctx.context_map.w);
                std::copy(dinput.data.begin() + static_cast<std::size_t>(i) * plane,
                          dinput.data.begin() + static_cast<std::size_t>(i + 1) * plane,
                          mgrad.data.begin());
                if (branch_map_grads) {
                    for (std::size_t j = 0; j < mgrad.data.size(); ++j) {
                        mgrad.data[j] += (*branch_map_grads)[i].data[j];
                    }
                }
                attach_grads[i] =
                    model.branch_backward(i, ctx.branches[i], attachments[i], mgrad, nullptr);
            }
        }
        return attach_grads;
    }
};

ContextNetResult RexNetModel::contextnet_forward(const ColorImage& image) const {
    const ColorImage padded = pad_replicate(image, kMaskDownsample);
    TrunkContext trunk = trunk_forward(image_to_tensor(padded));
    std::array<Tensor, 4> attachments;
    for (int i = 0; i < 4; ++i) attachments[i] = trunk.attachment(i);
    Stage2Workspace ws{*const_cast<RexNetModel&>(*this)};
    BranchFusionContext ctx = ws.forward(attachments);
    ContextNetResult out;
    for (int i = 0; i < 4; ++i) out.branch_maps[i] = plane_from_tensor(ctx.branches[i].map);
    out.context_map = plane_from_tensor(ctx.context_map);
    Tensor up = bilinear_upsample(ctx.context_map, kBranchScale);
    out.context_map_fullres = crop(plane_from_tensor(up), image.h, image.w);
    return out;
}

Plane RexNetModel::fuse_saliency(const Plane& map_sp, const Plane& map_edge,
                                 const Plane& context_fullres) const {
    Tensor input = stack_planes({&map_sp, &map_edge, &context_fullres});
    Tensor pre = conv2d_forward(input, fuse_final_);
    return plane_from_tensor(sigmoid_forward(pre));
}

PredictResult RexNetModel::predict(const ColorImage& image, const RegionMask& sp_mask,
                                   const RegionMask& edge_mask) const {
    const ColorImage padded = pad_replicate(image, kMaskDownsample);
    TrunkContext trunk = trunk_forward(image_to_tensor(padded));
    const Tensor& feats = trunk.roi_features();

    PredictResult out;
    auto region_pass = [&](const RegionMask& mask) {
        const RegionMask pmask = pad_mask(mask, kMaskDownsample);
        const DownsampledMask ds = downsample_mask(pmask, kMaskDownsample);
        std::vector<RoI> rois = region_rois(pmask);
        for (RoI& r : rois) r = roi_to_feature_coords(r, kMaskDownsample, feats.h, feats.w);
        RegionHeadContext head = region_head_forward(feats, rois, ds);
        std::vector<double> probs(head.rows);
        for (int r = 0; r < head.rows; ++r) probs[r] = head.probs[2 * r + 1];
        return paint_region_map(mask, probs);
    };
    out.map_superpixel = region_pass(sp_mask);
    out.map_edge = region_pass(edge_mask);

    std::array<Tensor, 4> attachments;
    for (int i = 0; i < 4; ++i) attachments[i] = trunk.attachment(i);
    Stage2Workspace ws{*const_cast<RexNetModel&>(*this)};
    BranchFusionContext ctx = ws.forward(attachments);
    for (int i = 0; i < 4; ++i) out.branch_maps[i] = plane_from_tensor(ctx.branches[i].map);
    Tensor up = bilinear_upsample(ctx.context_map, kBranchScale);
    out.map_context = crop(plane_from_tensor(up), image.h, image.w);
    out.map_fused = fuse_saliency(out.map_superpixel, out.map_edge, out.map_context);
    return out;
}

double RexNetModel::deep_supervised_loss(const std::array<Plane, 4>& branch_maps,
                                         const Plane& context_map, const Plane& gt,
                                         const RegionMask& edge_mask) const {
    const int factor = gt.h / context_map.h;
    const Plane gt_ds = factor > 1 ? downsample_gt(gt, factor) : gt;
    const std::vector<std::int32_t> labels =
        resample_labels_nn(edge_mask, context_map.h, context_map.w);
    double total = 0.0;
    for (const Plane& m : branch_maps) {
        total += cross_entropy_loss(m, gt_ds) +
                 cfg_.lambda_edge * edge_loss_on_labels(m, labels, edge_mask.region_count);
    }
    total += cross_entropy_loss(context_map, gt_ds) +
             cfg_.lambda_edge * edge_loss_on_labels(context_map, labels, edge_mask.region_count);
    return total;
}

std::string train_log_csv(const std::vector<TrainLogRow>& rows) {
    std::ostringstream os;
    os << "iteration,stage,region_loss,context_ce,context_edge,fusion_ce,fusion_edge,total,"
          "learning_rate\n";
    os.precision(12);
    for (const TrainLogRow& r : rows) {
        os << r.iteration << "," << r.stage << "," << r.region_loss << "," << r.context_ce << ","
           << r.context_edge << "," << r.fusion_ce << "," << r.fusion_edge << "," << r.total
           << "," << r.learning_rate << "\n";
    }
    return os.str();
}

std::vector<TrainLogRow> RexNetModel::train_two_stage(const std::vector<TrainSample>& corpus,
                                                      const TrainOptions& options) {
    if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
    std::vector<TrainLogRow> log;
    log.reserve(options.stage1_iterations + options.stage2_iterations);

    struct MaskCache {
        DownsampledMask ds;
        std::vector<RoI> feature_rois;
        std::vector<RegionLabel> labels;
        int labeled = 0;
    };
    struct SampleCache {
        Tensor input;
        MaskCache sp, edge;
    };

    const int n = static_cast<int>(corpus.size());
    std::vector<SampleCache> cache(n);
    for (int i = 0; i < n; ++i) {
        const TrainSample& s = corpus[i];
        cache[i].input = image_to_tensor(pad_replicate(s.image, kMaskDownsample));
        const int fh = cache[i].input.h / kMaskDownsample;
        const int fw = cache[i].input.w / kMaskDownsample;
        auto build = [&](const RegionMask& mask, MaskCache& mc) {
            const RegionMask pmask = pad_mask(mask, kMaskDownsample);
            mc.ds = downsample_mask(pmask, kMaskDownsample);
            mc.feature_rois = region_rois(pmask);
            for (RoI& r : mc.feature_rois) {
                r = roi_to_feature_coords(r, kMaskDownsample, fh, fw);
            }
            mc.labels = region_label(mask, s.gt);
            for (RegionLabel l : mc.labels) {
                if (l != RegionLabel::ignore) ++mc.labeled;
            }
        };
        build(s.sp_mask, cache[i].sp);
        build(s.edge_mask, cache[i].edge);
    }

    auto s1_params = params_stage1();

    // Stage 1: trunk + region head on the per-region softmax loss over
    // both mask decompositions of one image per iteration.
    for (int it = 0; it < options.stage1_iterations; ++it) {
        const int idx = it % n;
        SampleCache& sc = cache[idx];
        TrunkContext trunk = trunk_forward(sc.input);
        const Tensor& feats = trunk.roi_features();

        zero_stage1_grads();
        const int total_labeled = sc.sp.labeled + sc.edge.labeled;
        double loss = 0.0;
        Tensor feat_grad(feats.n, feats.c, feats.h, feats.w);
        if (total_labeled > 0) {
            for (MaskCache* mc : {&sc.sp, &sc.edge}) {
                RegionHeadContext head = region_head_forward(feats, mc->feature_rois, mc->ds);
                std::vector<double> dlogits(head.probs.size(), 0.0);
                for (int r = 0; r < head.rows; ++r) {
                    const RegionLabel lab = mc->labels[r];
                    if (lab == RegionLabel::ignore) continue;
                    const int y = lab == RegionLabel::salient ? 1 : 0;
                    const double p = head.probs[2 * r + y];
                    loss -= std::log(std::max(p, 1e-300)) / total_labeled;
                    // combined softmax + NLL gradient: (p - onehot)/n
                    dlogits[2 * r] = (head.probs[2 * r] - (y == 0 ? 1.0 : 0.0)) / total_labeled;
                    dlogits[2 * r + 1] =
                        (head.probs[2 * r + 1] - (y == 1 ? 1.0 : 0.0)) / total_labeled;
                }
                Tensor g = region_head_backward(head, feats, dlogits);
                for (std::size_t j = 0; j < feat_grad.data.size(); ++j) {
                    feat_grad.data[j] += g.data[j];
                }
            }
            if (!std::isfinite(loss)) {
                throw std::runtime_error("stage-1 loss is not finite at iteration " +
                                         std::to_string(it));
            }
            trunk_backward(trunk, feat_grad);
            sgd_step(s1_params, options.sgd);
        }
        log.push_back({it, 1, loss, 0.0, 0.0, 0.0, 0.0, loss, options.sgd.learning_rate});
    }

    // Stage 2: freeze stage-1 weights; cache the frozen trunk activations
    // and region maps per image, then train branches and both fusions.
    struct Stage2Cache {
        std::array<Tensor, 4> attachments;
        Plane map_sp, map_edge;
        Plane gt_pad;
        Plane gt_ds;
        std::vector<std::int32_t> edge_labels_ds;
        std::vector<std::int32_t> edge_labels_full;
        int edge_regions = 0;
    };
    std::vector<Stage2Cache> s2(n);
    for (int i = 0; i < n; ++i) {
        const TrainSample& s = corpus[i];
        SampleCache& sc = cache[i];
        TrunkContext trunk = trunk_forward(sc.input);
        Stage2Cache& c = s2[i];
        for (int a = 0; a < 4; ++a) c.attachments[a] = trunk.attachment(a);
        const Tensor& feats = trunk.roi_features();
        auto region_map = [&](const MaskCache& mc, const RegionMask& mask) {
            RegionHeadContext head = region_head_forward(feats, mc.feature_rois, mc.ds);
            std::vector<double> probs(head.rows);
            for (int r = 0; r < head.rows; ++r) probs[r] = head.probs[2 * r + 1];
            return paint_region_map(pad_mask(mask, kMaskDownsample), probs);
        };
        c.map_sp = region_map(sc.sp, s.sp_mask);
        c.map_edge = region_map(sc.edge, s.edge_mask);
        c.gt_pad = pad_replicate(s.gt, kMaskDownsample);
        for (double& v : c.gt_pad.v) v = v != 0.0 ? 1.0 : 0.0;
        c.gt_ds = downsample_gt(c.gt_pad, kBranchScale);
        const RegionMask pedge = pad_mask(s.edge_mask, kMaskDownsample);
        c.edge_labels_ds =
            resample_labels_nn(pedge, c.gt_pad.h / kBranchScale, c.gt_pad.w / kBranchScale);
        c.edge_labels_full = pedge.labels;
        c.edge_regions = pedge.region_count;
    }

    auto s2_params = params_stage2();
    Stage2Workspace ws{*this};
    const double lambda = cfg_.lambda_edge;

    for (int it = 0; it < options.stage2_iterations; ++it) {
        const int idx = it % n;
        Stage2Cache& c = s2[idx];
        BranchFusionContext ctx = ws.forward(c.attachments);
        const Plane context_map = plane_from_tensor(ctx.context_map);

        Tensor up = bilinear_upsample(ctx.context_map, kBranchScale);
        const Plane context_full = plane_from_tensor(up);
        Tensor fuse_input = stack_planes({&c.map_sp, &c.map_edge, &context_full});
        Tensor pre_fuse = conv2d_forward(fuse_input, fuse_final_);
        Tensor fused = sigmoid_forward(pre_fuse);
        const Plane fused_map = plane_from_tensor(fused);

        double context_ce = 0.0, context_edge = 0.0;
        std::array<Tensor, 4> branch_grads;
        std::array<Plane, 4> branch_planes;
        for (int b = 0; b < 4; ++b) branch_planes[b] = plane_from_tensor(ctx.branches[b].map);
        if (cfg_.deep_supervision) {
            for (int b = 0; b < 4; ++b) {
                Plane eg;
                context_ce += cross_entropy_loss(branch_planes[b], c.gt_ds);
                context_edge +=
                    edge_loss_on_labels(branch_planes[b], c.edge_labels_ds, c.edge_regions, &eg);
                Plane cg = cross_entropy_grad(branch_planes[b], c.gt_ds);
                branch_grads[b] = Tensor(1, 1, context_map.h, context_map.w);
                for (std::size_t j = 0; j < cg.v.size(); ++j) {
                    branch_grads[b].data[j] = cg.v[j] + lambda * eg.v[j];
                }
            }
        } else {
            for (int b = 0; b < 4; ++b) {
                branch_grads[b] = Tensor(1, 1, context_map.h, context_map.w);
            }
        }
        {
            Plane eg;
            context_ce += cross_entropy_loss(context_map, c.gt_ds);
            context_edge +=
                edge_loss_on_labels(context_map, c.edge_labels_ds, c.edge_regions, &eg);
        }

        Plane fusion_eg;
        const double fusion_ce = cross_entropy_loss(fused_map, c.gt_pad);
        const double fusion_edge =
            edge_loss_on_labels(fused_map, c.edge_labels_full, c.edge_regions, &fusion_eg);
        const double total = context_ce + lambda * context_edge + fusion_ce + lambda * fusion_edge;
        if (!std::isfinite(total)) {
            throw std::runtime_error("stage-2 loss is not finite at iteration " +
                                     std::to_string(it));
        }

        zero_stage2_grads();

        // fused-map path
        Plane fusion_cg = cross_entropy_grad(fused_map, c.gt_pad);
        Tensor dfused(1, 1, fused.h, fused.w);
        for (std::size_t j = 0; j < fusion_cg.v.size(); ++j) {
            dfused.data[j] = fusion_cg.v[j] + lambda * fusion_eg.v[j];
        }
        Tensor dpre_fuse = sigmoid_backward(fused, dfused);
        Tensor dfuse_input = conv2d_backward(fuse_input, fuse_final_, dpre_fuse);
        Tensor dcontext_full(1, 1, fused.h, fused.w);
        std::copy(dfuse_input.data.begin() + 2 * fused_map.size(),
                  dfuse_input.data.begin() + 3 * fused_map.size(), dcontext_full.data.begin());
        Tensor dcontext = bilinear_upsample_backward(ctx.context_map, kBranchScale, dcontext_full);

        // context-map supervision lands on the same sigmoid output
        {
            Plane eg;
            edge_loss_on_labels(context_map, c.edge_labels_ds, c.edge_regions, &eg);
            Plane cg = cross_entropy_grad(context_map, c.gt_ds);
            for (std::size_t j = 0; j < cg.v.size(); ++j) {
                dcontext.data[j] += cg.v[j] + lambda * eg.v[j];
            }
        }

        ws.backward(ctx, c.attachments, dcontext, &branch_grads);
        sgd_step(s2_params, options.sgd);

        log.push_back({options.stage1_iterations + it, 2, 0.0, context_ce, context_edge,
                       fusion_ce, fusion_edge, total, options.sgd.learning_rate});
    }
    return log;
}

void RexNetModel::save(const std::string& dir) {
    auto params = params_all();
    save_checkpoint(dir, params);
}

void RexNetModel::load(const std::string& dir) {
    auto params = params_all();
    load_checkpoint(dir, params);
}

}  // namespace rexnet
