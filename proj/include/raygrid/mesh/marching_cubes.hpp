// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "raygrid/common.hpp"
#include "raygrid/common/bitgrid.hpp"
#include "raygrid/heads/objects.hpp"

namespace raygrid::mesh {

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    double surface_area() const;
    /// Counts of unique undirected edges after vertex dedup.
    int64_t edge_count() const;
    int64_t euler_characteristic() const {
        return static_cast<int64_t>(vertices.size()) - edge_count() +
               static_cast<int64_t>(triangles.size());
    }
    /// True when every undirected edge borders exactly two triangles.
    bool watertight() const;
};

/// Isosurface of a scalar field sampled at dims[0] x dims[1] x dims[2] points
/// (x fastest). A point is inside when field >= iso; the field is padded with
/// an outside layer, so meshes are always closed. Vertices are in sample-index
/// coordinates and deduplicated per lattice edge. The 256-entry cube table is
/// built once at startup from per-face marching-squares rules with a fixed
/// resolution of ambiguous faces, which keeps adjacent cubes consistent.
TriMesh marching_cubes(const std::vector<double>& field,
                       const std::array<int, 3>& dims, double iso);

/// Mesh of a predicted shape grid in canonical coordinates: sample centers
/// span [-0.5, 0.5]^3, occupancy = sigmoid(logit) >= iso (default 0.5, the
/// logit-zero surface).
TriMesh shape_mesh(const std::vector<float>& shape_logits, int shape_dim,
                   double iso = 0.5);

/// Mesh of a binary voxel volume (cell centers as samples, values 0/1).
TriMesh volume_mesh(const BitVolume& volume);

TriMesh apply_pose(const heads::ObjectPose& pose, const TriMesh& canonical);

/// The 8 world-space corners of a yaw-rotated unit box under the pose.
std::array<Vec3, 8> box_corners(const heads::ObjectPose& pose);

void save_obj(const std::filesystem::path& path, const TriMesh& mesh);

}  // namespace raygrid::mesh
