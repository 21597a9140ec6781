// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "raygrid/common.hpp"

namespace raygrid::geometry {

struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;

    void validate() const;
};

/// Camera-to-world transform. World frame is right-handed with z up; the
/// camera looks along its local +z axis.
struct CameraPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    /// Checks that rotation is orthonormal with determinant +1.
    void validate(double tol = 1e-6) const;
};

struct CameraView {
    CameraIntrinsics intrinsics;
    CameraPose pose;
    // Coarse grid the backbone operates on; must divide the image evenly.
    int feature_width = 0;
    int feature_height = 0;

    void validate() const;
    int feature_stride_x() const { return intrinsics.width / feature_width; }
    int feature_stride_y() const { return intrinsics.height / feature_height; }
};

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::Zero();  // unit length
    double t_near = 0.0;
    double t_far = 0.0;
};

struct RayClip {
    double t_near = 0.05;
    double t_far = 12.0;
};

/// Ray through the center of feature cell (row, col), in world space.
Ray pixel_ray(const CameraView& view, int row, int col, const RayClip& clip = {});

/// Ray through the center of full-resolution image pixel (row, col).
Ray image_pixel_ray(const CameraView& view, int row, int col, const RayClip& clip = {});

/// Projects a world point onto the feature grid. Returns false if the point is
/// behind the camera or falls outside the image.
bool project_to_feature_cell(const CameraView& view, const Vec3& p, int& row,
                             int& col);

std::vector<CameraView> load_trajectory(const std::filesystem::path& path,
                                        int feature_stride = 16);
void save_trajectory(const std::filesystem::path& path,
                     const std::vector<CameraView>& views);

}  // namespace raygrid::geometry
