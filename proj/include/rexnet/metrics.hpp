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

#ifndef REXNET_METRICS_HPP
#define REXNET_METRICS_HPP

#include <array>
#include <string>
#include <vector>

#include "rexnet/image.hpp"

namespace rexnet {

inline constexpr int kThresholds = 256;

struct PrCurve {
    std::array<double, kThresholds> precision{};
    std::array<double, kThresholds> recall{};
};

struct EvalReport {
    PrCurve pr;
    double f_beta = 0.0;
    double mae = 0.0;
    double auc = 0.0;
};

/// Affine min-max rescale to integers in [0,255]; constant maps go to 0.
std::vector<int> normalize_map(const Plane& map);

/// Precision/recall at the 256 binarizations norm >= t. Precision is 1
/// when nothing is predicted. Throws if the ground truth is empty.
PrCurve pr_curve(const std::vector<int>& norm, const Plane& gt);

/// Max over the curve of (1+b2)PR / (b2 P + R); zero-denominator pairs
/// contribute 0.
double f_measure(const PrCurve& pr, double beta_sq);

/// Mean absolute difference on the [0,1] saliency map (not the integer
/// normalization).
double mae(const Plane& map, const Plane& gt);

/// Trapezoid over recall after keeping the best precision per recall
/// level and extending the lowest-recall precision down to recall 0.
double auc(const PrCurve& pr);

EvalReport evaluate_map(const Plane& map, const Plane& gt, double beta_sq);

/// Pointwise-mean PR across images; F-beta re-derived from the averaged
/// curve; MAE averaged; AUC of the averaged curve.
EvalReport aggregate(const std::vector<EvalReport>& reports, double beta_sq);

// Report emission (CSV with header row; standalone SVG line plot).
std::string eval_csv(const std::vector<std::string>& ids,
                     const std::vector<EvalReport>& reports, const EvalReport& dataset);
std::string pr_csv(const PrCurve& pr);
std::string pr_svg(const PrCurve& pr, const std::string& title);

}  // namespace rexnet

#endif  // REXNET_METRICS_HPP
