// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "raygrid/backbone/backbone.hpp"
#include "raygrid/common/bitgrid.hpp"
#include "raygrid/geometry/camera.hpp"
#include "raygrid/geometry/voxel_grid.hpp"
#include "raygrid/heads/objects.hpp"

namespace raygrid::heads {

using nn::Tape;
using nn::TapeBinding;
using nn::Tensor;

/// Scene occupancy logits from the voxel stream: one kernel-1 3D convolution,
/// zero-initialized. Input [n_voxels, d], output [1, nz, ny, nx, 1].
template <typename T>
int occupancy_head(Tape<T>& tape, TapeBinding<T>& params, int v_n,
                   const backbone::BackboneConfig& config);

/// Per-view foreground/background logits at full image resolution: four
/// transposed convolutions upsample the pixel stream 16x. Input
/// [n_views*Hf*Wf, d], output [n_views, H, W, 1].
template <typename T>
int segmentation_head(Tape<T>& tape, TapeBinding<T>& params, int p_n, int n_views,
                      const backbone::BackboneConfig& config);

/// Renders the scene volume from an unseen viewpoint: a query pixel stream
/// initialized from the positional encoding alone attends into v_n through
/// the query view's ray mask (one 3D->2D block), then a transposed-conv
/// decoder produces an RGB image in (0, 1), shape [1, H, W, 3]. Warns when
/// the query view sees no voxels.
template <typename T>
int nvs_render(Tape<T>& tape, TapeBinding<T>& params, int v_n,
               const geometry::CameraView& query_view,
               const geometry::VoxelGridSpec& grid,
               const backbone::BackboneConfig& config);

/// Coarse occupancy target: a grid voxel is set iff its center lies inside an
/// occupied shape cell of any posed object.
BitVolume rasterize_occupancy(std::span<const ObjectGT> objects,
                              const geometry::VoxelGridSpec& grid);

/// Amodal foreground masks at full image resolution: a pixel is set iff its
/// ray intersects any object's posed occupied cells, regardless of occlusion.
std::vector<BitImage> rasterize_amodal_masks(std::span<const ObjectGT> objects,
                                             std::span<const geometry::CameraView> views);

}  // namespace raygrid::heads
