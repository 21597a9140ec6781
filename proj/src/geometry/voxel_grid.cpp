// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/geometry/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace raygrid::geometry {

void VoxelGridSpec::validate() const {
    detail::check(dims[0] > 0 && dims[1] > 0 && dims[2] > 0,
                  "grid dims must be positive");
    detail::check(voxel_size.minCoeff() > 0.0, "voxel size must be positive");
    detail::check(origin.allFinite(), "grid origin must be finite");
}

std::vector<VoxelCoord> traverse_voxels(const Ray& ray, const VoxelGridSpec& grid) {
    grid.validate();
    detail::check(ray.t_far >= ray.t_near && ray.t_near >= 0.0,
                  "ray interval must satisfy 0 <= near <= far");
    detail::check(std::abs(ray.direction.norm() - 1.0) <= 1e-9,
                  "ray direction must be unit length");

    // Clip [t_near, t_far] against the grid bounding box.
    double t0 = ray.t_near;
    double t1 = ray.t_far;
    const Vec3 lo = grid.origin;
    const Vec3 hi = grid.max_corner();
    for (int a = 0; a < 3; ++a) {
        const double d = ray.direction[a];
        const double o = ray.origin[a];
        if (d == 0.0) {
            if (o < lo[a] || o >= hi[a]) return {};
            continue;
        }
        double ta = (lo[a] - o) / d;
        double tb = (hi[a] - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 >= t1) return {};

    const Vec3 entry = ray.origin + t0 * ray.direction;
    VoxelCoord cur;
    std::array<int, 3> step{};
    Vec3 t_next, t_delta;
    for (int a = 0; a < 3; ++a) {
        double frac = (entry[a] - lo[a]) / grid.voxel_size[a];
        int c = static_cast<int>(std::floor(frac));
        c = std::clamp(c, 0, grid.dims[a] - 1);
        (a == 0 ? cur.x : a == 1 ? cur.y : cur.z) = c;
        const double d = ray.direction[a];
        if (d > 0.0) {
            step[a] = 1;
            t_next[a] = ((c + 1) * grid.voxel_size[a] + lo[a] - ray.origin[a]) / d;
            t_delta[a] = grid.voxel_size[a] / d;
        } else if (d < 0.0) {
            step[a] = -1;
            t_next[a] = (c * grid.voxel_size[a] + lo[a] - ray.origin[a]) / d;
            t_delta[a] = -grid.voxel_size[a] / d;
        } else {
            step[a] = 0;
            t_next[a] = std::numeric_limits<double>::infinity();
            t_delta[a] = std::numeric_limits<double>::infinity();
        }
    }

    std::vector<VoxelCoord> out;
    out.reserve(grid.dims[0] + grid.dims[1] + grid.dims[2]);
    while (true) {
        out.push_back(cur);
        // Advance across the nearest voxel face.
        int axis = 0;
        if (t_next[1] < t_next[axis]) axis = 1;
        if (t_next[2] < t_next[axis]) axis = 2;
        if (t_next[axis] >= t1) break;
        int& c = axis == 0 ? cur.x : axis == 1 ? cur.y : cur.z;
        c += step[axis];
        if (c < 0 || c >= grid.dims[axis]) break;
        t_next[axis] += t_delta[axis];
    }
    return out;
}

VoxelGridSpec center_volume(std::span<const CameraView> views, const Vec3& extent,
                            const std::array<int, 3>& dims) {
    detail::check(!views.empty(), "center_volume needs at least one view");
    detail::check(extent.minCoeff() > 0.0, "volume extent must be positive");
    Vec3 centroid = Vec3::Zero();
    for (const auto& view : views) centroid += view.pose.translation;
    centroid /= static_cast<double>(views.size());
    VoxelGridSpec grid;
    grid.dims = dims;
    grid.voxel_size =
        Vec3(extent.x() / dims[0], extent.y() / dims[1], extent.z() / dims[2]);
    grid.origin = centroid - extent / 2.0;
    grid.validate();
    return grid;
}

}  // namespace raygrid::geometry
