// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "raygrid/geometry/voxel_grid.hpp"

namespace raygrid::geometry {

/// One ray-voxel incidence: feature cell (row, col) of a view whose ray
/// pierces voxel (vx, vy, vz).
struct InteractionPair {
    uint32_t view = 0, row = 0, col = 0;
    uint32_t vx = 0, vy = 0, vz = 0;
    friend auto operator<=>(const InteractionPair&, const InteractionPair&) = default;
};

struct InteractionIndex {
    std::vector<InteractionPair> pairs;  // sorted lexicographically, no duplicates
    uint32_t n_views = 0;
    uint32_t feature_height = 0;
    uint32_t feature_width = 0;
    std::array<int, 3> grid_dims = {0, 0, 0};

    int64_t n_pixels_total() const {
        return static_cast<int64_t>(n_views) * feature_height * feature_width;
    }
    int64_t n_voxels_total() const {
        return static_cast<int64_t>(grid_dims[0]) * grid_dims[1] * grid_dims[2];
    }
    int64_t pixel_flat(uint32_t view, uint32_t row, uint32_t col) const {
        return (static_cast<int64_t>(view) * feature_height + row) * feature_width +
               col;
    }
    int64_t voxel_flat(uint32_t vx, uint32_t vy, uint32_t vz) const {
        return vx + static_cast<int64_t>(grid_dims[0]) *
                        (vy + static_cast<int64_t>(grid_dims[1]) * vz);
    }
    /// Largest number of pairs sharing one pixel (0 for an empty index).
    int64_t max_pairs_per_pixel() const;
};

InteractionIndex build_interaction_index(std::span<const CameraView> views,
                                         const VoxelGridSpec& grid,
                                         const RayClip& clip = {});

struct MemoryReport {
    int64_t entries = 0;
    double dense_bytes = 0.0;
    double sparse_bytes = 0.0;
    double ratio = 0.0;  // +infinity when the index is empty
    double fwd_ms = -1.0;  // timings are filled by the benchmark, -1 = not run
    double bwd_ms = -1.0;
};

/// Dense cost covers full attention matrices in both directions; sparse cost
/// stores three scalars per pair per head per direction.
MemoryReport memory_report(const InteractionIndex& index, int n_heads,
                           int bytes_per_scalar);

/// Binary index file: magic "RTIX", version, counts, then packed little-endian
/// u32 sextuples in sorted order.
void save_index(const std::filesystem::path& path, const InteractionIndex& index);
InteractionIndex load_index(const std::filesystem::path& path);

}  // namespace raygrid::geometry
