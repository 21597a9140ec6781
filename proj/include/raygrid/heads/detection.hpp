// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "raygrid/geometry/voxel_grid.hpp"
#include "raygrid/heads/objects.hpp"
#include "raygrid/nn/ops.hpp"
#include "raygrid/nn/params.hpp"

namespace raygrid::heads {

using nn::Tape;
using nn::TapeBinding;
using nn::Tensor;

/// Set-prediction decoder over a fixed number of query slots: per layer, query
/// self-attention, dense cross-attention into the voxel stream, and a
/// feed-forward sublayer, each with a residual connection and post layer norm.
/// Prediction heads are shared across layers and zero-initialized, so every
/// slot starts out predicting the head biases; the class bias favors the
/// padding category.
struct DetectionConfig {
    int n_queries = 8;
    int n_layers = 3;
    int n_heads = 4;
    int n_categories = 5;  // padding category is index n_categories
    int shape_dim = 15;    // must be 2^(L+1) - 1 for some layer count L
    int shape_channels = 32;
    double huber_beta_center = 1.0;       // meters
    double huber_beta_yaw = kPi / 8.0;    // radians
    double w_class = 1.0;
    double w_center = 5.0;
    double w_scale = 1.0;
    double w_yaw = 1.0;
    double w_shape = 1.0;  // loss only; matching always excludes the shape term

    static DetectionConfig toy();
    static DetectionConfig paper();  // 64 queries, 8 heads, 63^3 shapes

    /// Number of transposed convolutions needed to reach shape_dim from 1.
    int shape_layers() const;
    void validate(int d_model) const;
};

/// Tape ids of one decoder layer's raw predictions.
struct DecoderLayerIds {
    int class_logits = -1;  // [n_queries, n_categories + 1]
    int center = -1;        // [n_queries, 3], world meters (inside the grid)
    int log_scale = -1;     // [n_queries, 3]
    int yaw = -1;           // [n_queries, 1], radians, unwrapped
    int shape_logits = -1;  // [n_queries, S, S, S]
};

/// Runs the decoder over the backbone's voxel stream v_n ([n_voxels, d]).
/// Predicted centers are grid.origin + grid extent * sigmoid(raw), keeping
/// them inside the reconstruction volume. Returns one entry per layer, last
/// layer last.
template <typename T>
std::vector<DecoderLayerIds> detr_decode(Tape<T>& tape, TapeBinding<T>& params, int v_n,
                                         const geometry::VoxelGridSpec& grid,
                                         const DetectionConfig& config);

/// Reads one layer's values off the tape into prediction records. Scales are
/// exponentiated and yaw is wrapped to (-pi, pi].
template <typename T>
std::vector<ObjectPrediction> decode_predictions(const Tape<T>& tape,
                                                 const DecoderLayerIds& layer,
                                                 const DetectionConfig& config);

/// Matching cost of assigning a ground-truth object to a prediction slot:
/// w_class * (-probability of the GT category) + weighted pose errors. The
/// shape term is excluded.
double matching_cost(const ObjectPrediction& pred, const ObjectGT& gt,
                     const DetectionConfig& config);

struct DetectionLoss {
    int total = -1;  // scalar tape id, summed over decoder layers
    // Weighted component values accumulated over layers, for logging.
    double class_term = 0.0;
    double center_term = 0.0;
    double scale_term = 0.0;
    double yaw_term = 0.0;
    double shape_term = 0.0;
    int n_matched = 0;  // per layer (layers always match the same count)
};

/// Hungarian-matched set-prediction loss, all layers supervised. Matched slots
/// contribute cross-entropy, center/scale/yaw regression, and shape BCE;
/// unmatched slots contribute cross-entropy toward the padding category.
/// Regression and shape terms are averaged over ground-truth objects; the
/// class term is averaged over slots. Throws if the scene has more objects
/// than query slots.
template <typename T>
DetectionLoss detection_loss(Tape<T>& tape, const std::vector<DecoderLayerIds>& layers,
                             std::span<const ObjectGT> gts, const DetectionConfig& config);

}  // namespace raygrid::heads
