// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <vector>

#include "raygrid/heads/objects.hpp"

namespace raygrid::eval {

struct PoseThresholds {
    double translation_m = 0.20;
    double rotation_deg = 20.0;
    double scale_ratio = 0.20;
};

/// Per-axis pose errors between a prediction and a ground-truth pose.
/// scale_mean_axes selects the mean-over-axes relative error; default is the
/// stricter max-over-axes form.
struct PoseErrors {
    double translation_m = 0.0;
    double rotation_deg = 0.0;
    double scale_ratio = 0.0;
};
PoseErrors pose_errors(const heads::ObjectPose& pred, const heads::ObjectPose& gt,
                       bool scale_mean_axes = false);

struct ClassCount {
    int matched = 0;
    int total = 0;
};

/// A ground truth counts as detected when some same-category prediction has
/// all three errors simultaneously inside the thresholds; each prediction is
/// consumed at most once. The matched count is the maximum cardinality of
/// such a pairing per category, which makes accuracy monotone when any
/// threshold loosens. Counts can be accumulated across scenes.
struct PoseAccuracyResult {
    std::map<int, ClassCount> per_class;  // keyed by category, gt classes only
    int matched = 0;
    int total_gt = 0;

    double class_average() const;
    double global_average() const;
    void accumulate(const PoseAccuracyResult& other);
};

PoseAccuracyResult pose_accuracy(std::span<const heads::ObjectPrediction> preds,
                                 std::span<const heads::ObjectGT> gts,
                                 const PoseThresholds& thresholds,
                                 bool scale_mean_axes = false);

/// Monte-Carlo IoU of two yaw-rotated boxes: points are sampled uniformly in
/// the joint axis-aligned bounding box with a fixed seed.
double box_iou(const heads::ObjectPose& a, const heads::ObjectPose& b,
               int64_t samples = 100000, uint64_t seed = 0xB0C5EEDull);

struct DetectionPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int true_positives = 0;
    int n_predictions = 0;
    int n_ground_truth = 0;
};

/// Greedy matching by descending box IoU among same-category pairs; padding
/// predictions are ignored.
DetectionPRF detection_prf(std::span<const heads::ObjectPrediction> preds,
                           std::span<const heads::ObjectGT> gts,
                           double iou_threshold, int64_t iou_samples = 100000,
                           uint64_t seed = 0xB0C5EEDull);

}  // namespace raygrid::eval
