// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "raygrid/common.hpp"
#include "raygrid/common/bitgrid.hpp"

namespace raygrid::heads {

/// Yaw-rotated box: canonical coordinates in [-0.5, 0.5]^3 are scaled per
/// axis, rotated about world z, then translated.
struct ObjectPose {
    Vec3 center = Vec3::Zero();
    Vec3 scale = Vec3::Ones();  // full extents in meters
    double yaw = 0.0;           // radians, wrapped to (-pi, pi]
};

inline Vec3 apply_pose(const ObjectPose& pose, const Vec3& canonical) {
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    const Vec3 scaled = canonical.cwiseProduct(pose.scale);
    return Vec3(c * scaled.x() - s * scaled.y(), s * scaled.x() + c * scaled.y(),
                scaled.z()) +
           pose.center;
}

/// Inverse of apply_pose.
inline Vec3 to_canonical(const ObjectPose& pose, const Vec3& world) {
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    const Vec3 d = world - pose.center;
    const Vec3 unrot(c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z());
    return unrot.cwiseQuotient(pose.scale);
}

struct ObjectGT {
    int category = 0;
    ObjectPose pose;
    BitVolume shape;  // canonical occupancy, cell centers span [-0.5, 0.5]^3
};

struct ObjectPrediction {
    std::vector<double> category_logits;  // K+1 entries, padding last
    ObjectPose pose;                      // decoded from the slot outputs
    std::vector<float> shape_logits;      // S^3, x fastest; empty if not decoded
    int shape_dim = 0;

    int category() const {
        int best = 0;
        for (size_t i = 1; i < category_logits.size(); ++i)
            if (category_logits[i] > category_logits[best]) best = static_cast<int>(i);
        return best;
    }
    /// Softmax probability of a category.
    double probability(int cat) const;
    bool is_padding() const {
        return category() == static_cast<int>(category_logits.size()) - 1;
    }
};

inline double ObjectPrediction::probability(int cat) const {
    double mx = category_logits[0];
    for (double v : category_logits) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : category_logits) denom += std::exp(v - mx);
    return std::exp(category_logits[static_cast<size_t>(cat)] - mx) / denom;
}

}  // namespace raygrid::heads
