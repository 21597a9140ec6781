// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "raygrid/backbone/backbone.hpp"
#include "raygrid/common.hpp"
#include "raygrid/common/bitgrid.hpp"
#include "raygrid/geometry/camera.hpp"
#include "raygrid/heads/objects.hpp"
#include "raygrid/nn/tensor.hpp"

namespace raygrid::synth {

/// Procedural dataset parameters. Image size and frame count describe the
/// rendered trajectory; the model's voxel grid comes from BackboneConfig.
struct SynthConfig {
    int n_objects_min = 1;
    int n_objects_max = 4;
    std::vector<int> categories = {0, 1, 2, 3, 4};
    Vec3 room_extent = Vec3(6.0, 6.0, 3.0);
    int shape_dim = 15;  // canonical occupancy resolution per object
    int n_frames = 24;
    int image_height = 96;
    int image_width = 128;
    double focal = 85.0;
    // Object centers stay within this horizontal distance of the room center
    // so that the orbiting cameras keep every object in view.
    double placement_radius = 2.0;
    int max_placement_tries = 1000;

    static SynthConfig toy() { return {}; }
    static SynthConfig paper();

    void validate() const;
};

int n_categories();
const char* category_name(int category);
Vec3 category_color(int category);

/// Canonical occupancy of one category on a dim^3 grid whose cell centers
/// span (-0.5, 0.5)^3. Every category touches all six faces of the unit box
/// so the pose scale equals the object's tight extents.
BitVolume canonical_shape(int category, int dim);

struct GeneratedScene {
    std::vector<heads::ObjectGT> objects;
    Vec3 room_extent = Vec3::Zero();
};

/// Samples object categories, scales, yaws, and non-overlapping floor
/// placements. Throws if an object cannot be placed within
/// config.max_placement_tries rejections.
GeneratedScene generate_scene(uint64_t seed, const SynthConfig& config);

/// Smooth orbit at standing height around the room center with gentle height
/// and look-at variation. Consecutive camera centers are at most 0.3 m apart
/// and all cameras stay inside the room.
std::vector<geometry::CameraView> generate_trajectory(const Vec3& room_extent,
                                                      int n_frames,
                                                      uint64_t seed,
                                                      const SynthConfig& config);

struct RenderResult {
    nn::Tensor<float> images;        // [n_views, H, W, 3] in [0, 1]
    std::vector<BitImage> visible;   // per view, any-object foreground
};

/// Background gradient at one image row, exposed so tests compare against
/// the renderer's own arithmetic.
Vec3 background_color(int row, int height);

/// Flat-shaded depth-buffered rasterization of the exposed faces of each
/// object's posed occupancy cells, over a vertical background gradient.
/// Resolution comes from the views' intrinsics.
RenderResult render_views(std::span<const heads::ObjectGT> objects,
                          std::span<const geometry::CameraView> views);

/// A fully materialized training sample: scene, trajectory, renders, and the
/// occupancy / amodal-mask targets on the model's grid.
struct SceneSample {
    std::vector<heads::ObjectGT> objects;
    Vec3 room_extent = Vec3::Zero();
    std::vector<geometry::CameraView> views;
    nn::Tensor<float> images;  // [n_views, H, W, 3]
    geometry::VoxelGridSpec grid;
    BitVolume occupancy;
    std::vector<BitImage> amodal_masks;
    std::vector<BitImage> visible_masks;
    uint64_t seed = 0;
};

/// Deterministic (seed, config) -> sample. Redraws the scene (bounded, still
/// seeded) in the rare case an object covers no voxel center of the grid, so
/// nonempty scenes always produce nonzero occupancy targets.
SceneSample make_scene(uint64_t seed, const SynthConfig& synth,
                       const backbone::BackboneConfig& model);

}  // namespace raygrid::synth
