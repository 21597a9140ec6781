// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "raygrid/geometry/camera.hpp"
#include "raygrid/geometry/interaction.hpp"
#include "raygrid/geometry/voxel_grid.hpp"
#include "raygrid/nn/ops.hpp"
#include "raygrid/nn/params.hpp"
#include "raygrid/sparse/mask.hpp"

namespace raygrid::backbone {

using nn::Tape;
using nn::TapeBinding;
using nn::Tensor;

struct BackboneConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_blocks = 2;
    int ffn_hidden_2d = 32;
    int ffn_hidden_3d = 32;
    std::array<int, 3> grid_dims = {16, 16, 8};
    Vec3 volume_extent = Vec3(6.4, 6.4, 3.2);
    int image_height = 96;
    int image_width = 128;
    bool positional_encoding = true;

    static BackboneConfig toy();
    /// Full-scale configuration matching the published setup (20 views at
    /// 640x480s, 40x30 features, 48x48x16 grid over 9m x 9m x 3.5m, 8 heads).
    /// Used for index and memory benchmarks, not for desk-scale training.
    static BackboneConfig paper();

    void validate() const;
    int feature_height() const { return image_height / 16; }
    int feature_width() const { return image_width / 16; }
    int64_t n_voxels() const {
        return static_cast<int64_t>(grid_dims[0]) * grid_dims[1] * grid_dims[2];
    }
    /// Voxel grid of the configured extent centered on the camera centroid.
    geometry::VoxelGridSpec grid_for(std::span<const geometry::CameraView> views) const;
};

/// The sparse attention patterns of one scene in both directions, plus the
/// grid they were traced against.
struct SceneMasks {
    std::shared_ptr<const sparse::SparseMask> pixels_to_voxels;  // rows: voxels
    std::shared_ptr<const sparse::SparseMask> voxels_to_pixels;  // rows: pixels
    geometry::VoxelGridSpec grid;
    int n_views = 0;
    int feature_height = 0;
    int feature_width = 0;
};

SceneMasks build_scene_masks(std::span<const geometry::CameraView> views,
                             const geometry::VoxelGridSpec& grid);

/// Fixed sine-cosine encoding of the (row, col) feature-cell position,
/// identical across views; shape [n_views, height, width, d_model].
template <typename T>
Tensor<T> sincos_embedding_2d(int n_views, int height, int width, int d_model);

/// Get-or-create one attention sublayer's projections under the given name
/// prefix. The output projection starts at zero so a residual stream is
/// untouched at initialization.
template <typename T>
nn::ops::AttentionVars<T> attention_vars(TapeBinding<T>& params, const std::string& prefix,
                                         int d_model, int n_heads);

/// conv -> layer norm -> relu -> zero-initialized conv, all kernel 3 pad 1;
/// rank selects 2D or 3D. Input and output are channels-last grids.
template <typename T>
int conv_ffn(Tape<T>& tape, TapeBinding<T>& params, const std::string& prefix, int x,
             int rank, int64_t channels, int64_t hidden);

/// Tape ids of the two feature streams: pixels [n_views*Hf*Wf, d_model] and
/// voxels [n_voxels, d_model], both using the scene's flat orderings.
template <typename T>
struct StreamIds {
    int pixels = -1;
    int voxels = -1;
};

/// Strided convolutional encoder, 16x spatial reduction, output
/// [n_views, Hf, Wf, d_model].
template <typename T>
int encode_images(Tape<T>& tape, TapeBinding<T>& params, const Tensor<T>& images,
                  const BackboneConfig& config);

/// Positional encodings plus per-voxel mean unprojection of pixel features.
template <typename T>
StreamIds<T> init_streams(Tape<T>& tape, TapeBinding<T>& params, int p0,
                          const SceneMasks& masks, const BackboneConfig& config);

/// One 2D<->3D stage: two parallel residual streams, each a sparse attention
/// update followed by a convolutional feed-forward, both reading the block's
/// input streams. Attention output projections and final feed-forward layers
/// are zero-initialized, so a freshly created block is the identity map.
template <typename T>
StreamIds<T> block_forward(Tape<T>& tape, TapeBinding<T>& params,
                           const std::string& prefix, const StreamIds<T>& in,
                           const SceneMasks& masks, const BackboneConfig& config);

template <typename T>
StreamIds<T> backbone_forward(Tape<T>& tape, TapeBinding<T>& params,
                              const Tensor<T>& images, const SceneMasks& masks,
                              const BackboneConfig& config);

}  // namespace raygrid::backbone
