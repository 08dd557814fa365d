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

#include "rexnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace rexnet {

std::vector<int> normalize_map(const Plane& map) {
    for (double v : map.v) {
        if (!std::isfinite(v)) throw std::invalid_argument("saliency map has non-finite values");
    }
    const double lo = plane_min(map);
    const double hi = plane_max(map);
    std::vector<int> out(map.size(), 0);
    if (hi > lo) {
        const double scale = 255.0 / (hi - lo);
        for (std::size_t i = 0; i < map.size(); ++i) {
            out[i] = static_cast<int>(std::lround((map.v[i] - lo) * scale));
        }
    }
    return out;
}

PrCurve pr_curve(const std::vector<int>& norm, const Plane& gt) {
    if (norm.size() != gt.size()) {
        throw std::invalid_argument("pr_curve: map and ground truth dims differ");
    }
    std::int64_t pos_hist[kThresholds] = {0};
    std::int64_t neg_hist[kThresholds] = {0};
    std::int64_t total_pos = 0;
    for (std::size_t i = 0; i < norm.size(); ++i) {
        const int v = norm[i];
        if (v < 0 || v >= kThresholds) throw std::invalid_argument("normalized value out of range");
        if (gt.v[i] != 0.0) {
            ++pos_hist[v];
            ++total_pos;
        } else {
            ++neg_hist[v];
        }
    }
    if (total_pos == 0) throw std::invalid_argument("pr_curve: empty ground truth");

    PrCurve out;
    std::int64_t tp = 0, fp = 0;
    for (int t = kThresholds - 1; t >= 0; --t) {
        tp += pos_hist[t];
        fp += neg_hist[t];
        const std::int64_t predicted = tp + fp;
        out.precision[t] =
            predicted == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(predicted);
        out.recall[t] = static_cast<double>(tp) / static_cast<double>(total_pos);
    }
    return out;
}

double f_measure(const PrCurve& pr, double beta_sq) {
    double best = 0.0;
    for (int t = 0; t < kThresholds; ++t) {
        const double denom = beta_sq * pr.precision[t] + pr.recall[t];
        if (denom <= 0.0) continue;
        const double f = (1.0 + beta_sq) * pr.precision[t] * pr.recall[t] / denom;
        best = std::max(best, f);
    }
    return best;
}

double mae(const Plane& map, const Plane& gt) {
    if (map.h != gt.h || map.w != gt.w) {
        throw std::invalid_argument("mae: map and ground truth dims differ");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < map.size(); ++i) acc += std::abs(map.v[i] - gt.v[i]);
    return acc / static_cast<double>(map.size());
}

double auc(const PrCurve& pr) {
    // best precision per recall level, recall ascending
    std::vector<std::pair<double, double>> pts;  // (recall, precision)
    for (int t = 0; t < kThresholds; ++t) pts.emplace_back(pr.recall[t], pr.precision[t]);
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> curve;
    for (const auto& [r, p] : pts) {
        if (!curve.empty() && curve.back().first == r) {
            curve.back().second = std::max(curve.back().second, p);
        } else {
            curve.emplace_back(r, p);
        }
    }
    double area = 0.0;
    double prev_r = 0.0, prev_p = curve.front().second;  // extend leftmost precision to recall 0
    for (const auto& [r, p] : curve) {
        area += (r - prev_r) * 0.5 * (prev_p + p);
        prev_r = r;
        prev_p = p;
    }
    return std::clamp(area, 0.0, 1.0);
}

EvalReport evaluate_map(const Plane& map, const Plane& gt, double beta_sq) {
    EvalReport rep;
    rep.pr = pr_curve(normalize_map(map), gt);
    rep.f_beta = f_measure(rep.pr, beta_sq);
    rep.mae = mae(map, gt);
    rep.auc = auc(rep.pr);
    return rep;
}

EvalReport aggregate(const std::vector<EvalReport>& reports, double beta_sq) {
    if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
    EvalReport out;
    for (const EvalReport& r : reports) {
        for (int t = 0; t < kThresholds; ++t) {
            out.pr.precision[t] += r.pr.precision[t];
            out.pr.recall[t] += r.pr.recall[t];
        }
        out.mae += r.mae;
    }
    const double inv = 1.0 / static_cast<double>(reports.size());
    for (int t = 0; t < kThresholds; ++t) {
        out.pr.precision[t] *= inv;
        out.pr.recall[t] *= inv;
    }
    out.mae *= inv;
    out.f_beta = f_measure(out.pr, beta_sq);
    out.auc = auc(out.pr);
    return out;
}

namespace {
std::string fmt(double v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}
}  // namespace

std::string eval_csv(const std::vector<std::string>& ids,
                     const std::vector<EvalReport>& reports, const EvalReport& dataset) {
    std::ostringstream os;
    os << "id,f_beta,mae,auc\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        os << ids[i] << "," << fmt(reports[i].f_beta) << "," << fmt(reports[i].mae) << ","
           << fmt(reports[i].auc) << "\n";
    }
    os << "dataset," << fmt(dataset.f_beta) << "," << fmt(dataset.mae) << ","
       << fmt(dataset.auc) << "\n";
    return os.str();
}

std::string pr_csv(const PrCurve& pr) {
    std::ostringstream os;
    os << "threshold,precision,recall\n";
    for (int t = 0; t < kThresholds; ++t) {
        os << t << "," << fmt(pr.precision[t]) << "," << fmt(pr.recall[t]) << "\n";
    }
    return os.str();
}

std::string pr_svg(const PrCurve& pr, const std::string& title) {
    const int size = 480, margin = 50;
    const int span = size - 2 * margin;
    auto px = [&](double r) { return margin + r * span; };
    auto py = [&](double p) { return size - margin - p * span; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << span
       << "\" height=\"" << span << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = tick / 4.0;
        os << "<text x=\"" << px(v) - 8 << "\" y=\"" << size - margin + 18
           << "\" font-size=\"11\">" << fmt(v) << "</text>\n";
        os << "<text x=\"" << margin - 32 << "\" y=\"" << py(v) + 4 << "\" font-size=\"11\">"
           << fmt(v) << "</text>\n";
    }
    os << "<text x=\"" << size / 2 - 20 << "\" y=\"" << size - 12
       << "\" font-size=\"12\">recall</text>\n";
    os << "<text x=\"14\" y=\"" << size / 2
       << "\" font-size=\"12\" transform=\"rotate(-90 14 " << size / 2
       << ")\">precision</text>\n";
    os << "<text x=\"" << margin << "\" y=\"" << margin - 14 << "\" font-size=\"13\">" << title
       << "</text>\n";

    std::vector<std::pair<double, double>> pts;
    for (int t = 0; t < kThresholds; ++t) pts.emplace_back(pr.recall[t], pr.precision[t]);
    std::sort(pts.begin(), pts.end());
    os << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" points=\"";
    for (const auto& [r, p] : pts) os << px(r) << "," << py(p) << " ";
    os << "\"/>\n</svg>\n";
    return os.str();
}

}  // namespace rexnet
