// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "raygrid/nn/rng.hpp"

namespace raygrid::eval {

PoseErrors pose_errors(const heads::ObjectPose& pred, const heads::ObjectPose& gt,
                       bool scale_mean_axes) {
    detail::check(gt.scale.minCoeff() > 0.0, "gt scale must be positive");
    PoseErrors e;
    e.translation_m = (pred.center - gt.center).norm();
    e.rotation_deg = std::abs(wrap_angle(pred.yaw - gt.yaw)) * 180.0 / kPi;
    double acc = scale_mean_axes ? 0.0 : -1.0;
    for (int a = 0; a < 3; ++a) {
        const double rel = std::abs(pred.scale[a] / gt.scale[a] - 1.0);
        if (scale_mean_axes)
            acc += rel / 3.0;
        else
            acc = std::max(acc, rel);
    }
    e.scale_ratio = acc;
    return e;
}

double PoseAccuracyResult::class_average() const {
    if (per_class.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [cat, count] : per_class)
        sum += count.total > 0 ? static_cast<double>(count.matched) / count.total : 0.0;
    return sum / static_cast<double>(per_class.size());
}

double PoseAccuracyResult::global_average() const {
    return total_gt == 0 ? 0.0 : static_cast<double>(matched) / total_gt;
}

void PoseAccuracyResult::accumulate(const PoseAccuracyResult& other) {
    for (const auto& [cat, count] : other.per_class) {
        per_class[cat].matched += count.matched;
        per_class[cat].total += count.total;
    }
    matched += other.matched;
    total_gt += other.total_gt;
}

namespace {

/// Augmenting-path step of maximum bipartite matching (Kuhn's algorithm).
bool try_assign(int pred, const std::vector<std::vector<int>>& feasible_gts,
                std::vector<char>& visited, std::vector<int>& gt_owner) {
    for (int gt : feasible_gts[static_cast<size_t>(pred)]) {
        if (visited[static_cast<size_t>(gt)]) continue;
        visited[static_cast<size_t>(gt)] = 1;
        if (gt_owner[static_cast<size_t>(gt)] < 0 ||
            try_assign(gt_owner[static_cast<size_t>(gt)], feasible_gts, visited, gt_owner)) {
            gt_owner[static_cast<size_t>(gt)] = pred;
            return true;
        }
    }
    return false;
}

}  // namespace

PoseAccuracyResult pose_accuracy(std::span<const heads::ObjectPrediction> preds,
                                 std::span<const heads::ObjectGT> gts,
                                 const PoseThresholds& thresholds,
                                 bool scale_mean_axes) {
    PoseAccuracyResult result;
    result.total_gt = static_cast<int>(gts.size());
    for (const auto& gt : gts) result.per_class[gt.category].total += 1;

    // Categories never share predictions, so the matching splits per class.
    for (auto& [category, count] : result.per_class) {
        std::vector<int> class_gts;
        for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi)
            if (gts[static_cast<size_t>(gi)].category == category) class_gts.push_back(gi);

        std::vector<std::vector<int>> feasible_gts;
        for (int pi = 0; pi < static_cast<int>(preds.size()); ++pi) {
            const auto& pred = preds[static_cast<size_t>(pi)];
            if (pred.is_padding() || pred.category() != category) continue;
            std::vector<int> edges;
            for (int slot = 0; slot < static_cast<int>(class_gts.size()); ++slot) {
                const auto& gt = gts[static_cast<size_t>(class_gts[static_cast<size_t>(slot)])];
                const PoseErrors err = pose_errors(pred.pose, gt.pose, scale_mean_axes);
                if (err.translation_m <= thresholds.translation_m &&
                    err.rotation_deg <= thresholds.rotation_deg &&
                    err.scale_ratio <= thresholds.scale_ratio)
                    edges.push_back(slot);
            }
            feasible_gts.push_back(std::move(edges));
        }

        std::vector<int> gt_owner(class_gts.size(), -1);
        int class_matched = 0;
        for (int pi = 0; pi < static_cast<int>(feasible_gts.size()); ++pi) {
            std::vector<char> visited(class_gts.size(), 0);
            if (try_assign(pi, feasible_gts, visited, gt_owner)) ++class_matched;
        }
        count.matched = class_matched;
        result.matched += class_matched;
    }
    return result;
}

namespace {

/// World-space axis-aligned bounds of a yaw-rotated box.
void box_aabb(const heads::ObjectPose& box, Vec3& lo, Vec3& hi) {
    const double c = std::abs(std::cos(box.yaw)), s = std::abs(std::sin(box.yaw));
    const Vec3 half(0.5 * (c * box.scale.x() + s * box.scale.y()),
                    0.5 * (s * box.scale.x() + c * box.scale.y()),
                    0.5 * box.scale.z());
    lo = box.center - half;
    hi = box.center + half;
}

bool inside_box(const heads::ObjectPose& box, const Vec3& p) {
    const Vec3 canon = heads::to_canonical(box, p);
    return canon.cwiseAbs().maxCoeff() <= 0.5;
}

}  // namespace

double box_iou(const heads::ObjectPose& a, const heads::ObjectPose& b,
               int64_t samples, uint64_t seed) {
    detail::check(samples > 0, "box_iou: sample count must be positive");
    detail::check(a.scale.minCoeff() > 0.0 && b.scale.minCoeff() > 0.0,
                  "box_iou: scales must be positive");
    Vec3 lo_a, hi_a, lo_b, hi_b;
    box_aabb(a, lo_a, hi_a);
    box_aabb(b, lo_b, hi_b);
    if ((lo_a.array() > hi_b.array()).any() || (lo_b.array() > hi_a.array()).any())
        return 0.0;
    const Vec3 lo = lo_a.cwiseMin(lo_b);
    const Vec3 hi = hi_a.cwiseMax(hi_b);
    nn::Rng rng(seed);
    int64_t in_both = 0, in_either = 0;
    for (int64_t i = 0; i < samples; ++i) {
        const Vec3 p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                     rng.uniform(lo.z(), hi.z()));
        const bool ia = inside_box(a, p);
        const bool ib = inside_box(b, p);
        in_both += ia && ib;
        in_either += ia || ib;
    }
    return in_either == 0 ? 0.0
                          : static_cast<double>(in_both) / static_cast<double>(in_either);
}

DetectionPRF detection_prf(std::span<const heads::ObjectPrediction> preds,
                           std::span<const heads::ObjectGT> gts,
                           double iou_threshold, int64_t iou_samples, uint64_t seed) {
    DetectionPRF out;
    std::vector<int> kept;
    for (int pi = 0; pi < static_cast<int>(preds.size()); ++pi)
        if (!preds[static_cast<size_t>(pi)].is_padding()) kept.push_back(pi);
    out.n_predictions = static_cast<int>(kept.size());
    out.n_ground_truth = static_cast<int>(gts.size());

    struct Candidate {
        double iou;
        int pred, gt;
    };
    std::vector<Candidate> candidates;
    for (int ki = 0; ki < static_cast<int>(kept.size()); ++ki) {
        const auto& pred = preds[static_cast<size_t>(kept[static_cast<size_t>(ki)])];
        for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi) {
            if (pred.category() != gts[static_cast<size_t>(gi)].category) continue;
            const double iou =
                box_iou(pred.pose, gts[static_cast<size_t>(gi)].pose, iou_samples, seed);
            if (iou >= iou_threshold) candidates.push_back({iou, ki, gi});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.gt < b.gt;
    });
    std::vector<char> pred_used(kept.size(), 0), gt_used(gts.size(), 0);
    for (const auto& cand : candidates) {
        if (pred_used[static_cast<size_t>(cand.pred)] || gt_used[static_cast<size_t>(cand.gt)])
            continue;
        pred_used[static_cast<size_t>(cand.pred)] = 1;
        gt_used[static_cast<size_t>(cand.gt)] = 1;
        out.true_positives += 1;
    }
    // Undefined ratios (empty denominators) are reported as 0.
    out.precision = out.n_predictions == 0
                        ? 0.0
                        : static_cast<double>(out.true_positives) / out.n_predictions;
    out.recall = out.n_ground_truth == 0
                     ? 0.0
                     : static_cast<double>(out.true_positives) / out.n_ground_truth;
    out.f1 = out.precision + out.recall == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

}  // namespace raygrid::eval
