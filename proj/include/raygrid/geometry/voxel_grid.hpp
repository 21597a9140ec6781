// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "raygrid/common.hpp"
#include "raygrid/geometry/camera.hpp"

namespace raygrid::geometry {

struct VoxelCoord {
    int x = 0, y = 0, z = 0;
    friend bool operator==(const VoxelCoord&, const VoxelCoord&) = default;
};

struct VoxelGridSpec {
    Vec3 origin = Vec3::Zero();  // min corner
    Vec3 voxel_size = Vec3::Ones();
    std::array<int, 3> dims = {0, 0, 0};  // nx, ny, nz

    void validate() const;

    int64_t voxel_count() const {
        return static_cast<int64_t>(dims[0]) * dims[1] * dims[2];
    }
    /// x varies fastest: v = x + nx * (y + ny * z).
    int64_t flat_index(int x, int y, int z) const {
        return x + static_cast<int64_t>(dims[0]) * (y + static_cast<int64_t>(dims[1]) * z);
    }
    int64_t flat_index(const VoxelCoord& c) const {
        return flat_index(c.x, c.y, c.z);
    }
    VoxelCoord unflatten(int64_t v) const {
        VoxelCoord c;
        c.x = static_cast<int>(v % dims[0]);
        c.y = static_cast<int>((v / dims[0]) % dims[1]);
        c.z = static_cast<int>(v / (static_cast<int64_t>(dims[0]) * dims[1]));
        return c;
    }
    Vec3 voxel_center(int x, int y, int z) const {
        return origin + Vec3((x + 0.5) * voxel_size.x(), (y + 0.5) * voxel_size.y(),
                             (z + 0.5) * voxel_size.z());
    }
    Vec3 max_corner() const {
        return origin + Vec3(dims[0] * voxel_size.x(), dims[1] * voxel_size.y(),
                             dims[2] * voxel_size.z());
    }
    Vec3 extent() const { return max_corner() - origin; }
    bool contains(const VoxelCoord& c) const {
        return c.x >= 0 && c.x < dims[0] && c.y >= 0 && c.y < dims[1] && c.z >= 0 &&
               c.z < dims[2];
    }
};

/// Voxels pierced by the ray between t_near and t_far, in traversal order.
/// Amanatides-Woo stepping; each voxel cell is half-open [min, max) along each
/// axis, so a ray passing exactly on a shared face reports only the cell whose
/// closed side it touches. Output size is bounded by nx + ny + nz.
std::vector<VoxelCoord> traverse_voxels(const Ray& ray, const VoxelGridSpec& grid);

/// Places a grid of the given physical extent so that its center (in all three
/// axes) sits at the centroid of the camera positions.
VoxelGridSpec center_volume(std::span<const CameraView> views, const Vec3& extent,
                            const std::array<int, 3>& dims);

}  // namespace raygrid::geometry
