// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/heads/aux_heads.hpp"

#include <cmath>
#include <iostream>
#include <memory>

#include "raygrid/geometry/interaction.hpp"
#include "raygrid/nn/parallel.hpp"
#include "raygrid/sparse/mask.hpp"

namespace raygrid::heads {

namespace ops = nn::ops;

namespace {

/// Transposed-conv upsampling stack, 16x total, ending in a zero-initialized
/// projection to `out_channels` (so the initial output is zero).
template <typename T>
int upsample_decoder(Tape<T>& tape, TapeBinding<T>& params, const std::string& prefix,
                     int x, int64_t d, int64_t out_channels) {
    const nn::ConvSpec spec = nn::ConvSpec::make(2, 4, 2, 1);
    int64_t ci = d;
    for (int i = 0; i < 3; ++i) {
        const int64_t co = ci / 2;
        const std::string name = prefix + std::to_string(i);
        const int w = params.xavier(name + ".w", {co, 4, 4, ci}, 16 * ci, 16 * co);
        const int b = params.zeros(name + ".b", {co});
        x = ops::conv_transpose_nd(tape, x, w, b, spec);
        const int gamma = params.ones(name + ".ln.gamma", {co});
        const int beta = params.zeros(name + ".ln.beta", {co});
        x = ops::relu(tape, ops::layer_norm(tape, x, gamma, beta));
        ci = co;
    }
    const std::string name = prefix + "3";
    const int w = params.zeros(name + ".w", {out_channels, 4, 4, ci});
    const int b = params.zeros(name + ".b", {out_channels});
    return ops::conv_transpose_nd(tape, x, w, b, spec);
}

/// Canonical unit grid holding an object's shape cells.
geometry::VoxelGridSpec canonical_grid(const BitVolume& shape) {
    geometry::VoxelGridSpec grid;
    grid.origin = Vec3(-0.5, -0.5, -0.5);
    grid.dims = shape.dims;
    grid.voxel_size = Vec3(1.0 / shape.dims[0], 1.0 / shape.dims[1], 1.0 / shape.dims[2]);
    return grid;
}

}  // namespace

template <typename T>
int occupancy_head(Tape<T>& tape, TapeBinding<T>& params, int v_n,
                   const backbone::BackboneConfig& config) {
    const int64_t d = config.d_model;
    detail::check(tape.val(v_n).shape == std::vector<int64_t>({config.n_voxels(), d}),
                  "occupancy_head: voxel stream does not match config");
    const int grid = ops::reshape(tape, v_n,
                                  {1, config.grid_dims[2], config.grid_dims[1],
                                   config.grid_dims[0], d});
    const int w = params.zeros("occ.w", {1, 1, 1, 1, d});
    const int b = params.zeros("occ.b", {1});
    return ops::conv_nd(tape, grid, w, b, nn::ConvSpec::make(3, 1, 1, 0));
}

template <typename T>
int segmentation_head(Tape<T>& tape, TapeBinding<T>& params, int p_n, int n_views,
                      const backbone::BackboneConfig& config) {
    const int64_t d = config.d_model;
    const int64_t hf = config.feature_height(), wf = config.feature_width();
    detail::check(n_views > 0, "segmentation_head: need at least one view");
    detail::check(tape.val(p_n).shape == std::vector<int64_t>({n_views * hf * wf, d}),
                  "segmentation_head: pixel stream does not match config");
    const int grid = ops::reshape(tape, p_n, {n_views, hf, wf, d});
    return upsample_decoder(tape, params, "seg.dec", grid, d, 1);
}

template <typename T>
int nvs_render(Tape<T>& tape, TapeBinding<T>& params, int v_n,
               const geometry::CameraView& query_view,
               const geometry::VoxelGridSpec& grid,
               const backbone::BackboneConfig& config) {
    const int64_t d = config.d_model;
    detail::check(tape.val(v_n).shape == std::vector<int64_t>({config.n_voxels(), d}),
                  "nvs_render: voxel stream does not match config");
    detail::check(query_view.feature_height == config.feature_height() &&
                      query_view.feature_width == config.feature_width(),
                  "nvs_render: query view feature grid does not match config");
    const int64_t hf = config.feature_height(), wf = config.feature_width();
    const int64_t n_pixels = hf * wf;

    const geometry::CameraView views[1] = {query_view};
    const auto index = geometry::build_interaction_index(views, grid);
    const auto mask = std::make_shared<const sparse::SparseMask>(
        sparse::SparseMask::from_index(index, sparse::Direction::kVoxelsToPixels));
    if (mask->nnz() == 0)
        std::cerr << "nvs_render: query view sees no voxels of the volume\n";

    Tensor<T> posenc = backbone::sincos_embedding_2d<T>(1, static_cast<int>(hf),
                                                        static_cast<int>(wf),
                                                        static_cast<int>(d));
    posenc.shape = {n_pixels, d};
    int p = tape.leaf(std::move(posenc));
    p = ops::add_bias(tape, p, params.normal("nvs.view", {d}, 0.02));

    const auto vars = backbone::attention_vars(params, "nvs.attn", config.d_model,
                                               config.n_heads);
    const int f = ops::sparse_mha(tape, p, v_n, mask, vars);
    const int f_grid = ops::reshape(tape, f, {1, hf, wf, d});
    const int f2 = ops::add(
        tape, f_grid,
        backbone::conv_ffn(tape, params, "nvs.ffn", f_grid, 2, d, config.ffn_hidden_2d));
    return ops::sigmoid(tape, upsample_decoder(tape, params, "nvs.dec", f2, d, 3));
}

BitVolume rasterize_occupancy(std::span<const ObjectGT> objects,
                              const geometry::VoxelGridSpec& grid) {
    grid.validate();
    for (const ObjectGT& obj : objects) {
        detail::check(obj.shape.count() > 0, "rasterize_occupancy: object has no shape");
        detail::check(obj.pose.scale.minCoeff() > 0.0,
                      "rasterize_occupancy: scale must be > 0");
    }
    const int64_t n = grid.voxel_count();
    std::vector<uint8_t> hits(static_cast<size_t>(n), 0);
    nn::parallel_for(n, [&](int64_t v) {
        const geometry::VoxelCoord c = grid.unflatten(v);
        const Vec3 center = grid.voxel_center(c.x, c.y, c.z);
        for (const ObjectGT& obj : objects) {
            const Vec3 p = to_canonical(obj.pose, center);
            if (p.cwiseAbs().maxCoeff() >= 0.5) continue;
            const int sx = static_cast<int>(std::floor((p.x() + 0.5) * obj.shape.dims[0]));
            const int sy = static_cast<int>(std::floor((p.y() + 0.5) * obj.shape.dims[1]));
            const int sz = static_cast<int>(std::floor((p.z() + 0.5) * obj.shape.dims[2]));
            if (obj.shape.get(sx, sy, sz)) {
                hits[static_cast<size_t>(v)] = 1;
                break;
            }
        }
    });
    BitVolume out(grid.dims);
    for (int64_t v = 0; v < n; ++v)
        if (hits[static_cast<size_t>(v)]) out.set(v, true);
    return out;
}

std::vector<BitImage> rasterize_amodal_masks(std::span<const ObjectGT> objects,
                                             std::span<const geometry::CameraView> views) {
    struct PosedShape {
        const ObjectGT* obj;
        geometry::VoxelGridSpec canonical;
    };
    std::vector<PosedShape> shapes;
    for (const ObjectGT& obj : objects) {
        detail::check(obj.shape.count() > 0,
                      "rasterize_amodal_masks: object has no shape");
        detail::check(obj.pose.scale.minCoeff() > 0.0,
                      "rasterize_amodal_masks: scale must be > 0");
        shapes.push_back({&obj, canonical_grid(obj.shape)});
    }

    std::vector<BitImage> masks;
    for (const geometry::CameraView& view : views) {
        view.validate();
        const int h = view.intrinsics.height, w = view.intrinsics.width;
        std::vector<uint8_t> hits(static_cast<size_t>(h) * w, 0);
        nn::parallel_for(static_cast<int64_t>(h) * w, [&](int64_t i) {
            const int row = static_cast<int>(i / w);
            const int col = static_cast<int>(i % w);
            const geometry::Ray ray = image_pixel_ray(view, row, col);
            for (const PosedShape& ps : shapes) {
                // Transform the ray into the object's canonical frame; the
                // direction picks up the inverse scale and loses unit length,
                // so renormalize and keep the t-range wide open.
                const ObjectPose& pose = ps.obj->pose;
                geometry::Ray local;
                local.origin = to_canonical(pose, ray.origin);
                const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
                const Vec3 d = ray.direction;
                const Vec3 unrot(cy * d.x() + sy * d.y(), -sy * d.x() + cy * d.y(),
                                 d.z());
                local.direction = unrot.cwiseQuotient(pose.scale).normalized();
                local.t_near = 1e-9;
                local.t_far = 1e9;
                bool hit = false;
                for (const geometry::VoxelCoord& c :
                     geometry::traverse_voxels(local, ps.canonical)) {
                    if (ps.obj->shape.get(c.x, c.y, c.z)) {
                        hit = true;
                        break;
                    }
                }
                if (hit) {
                    hits[static_cast<size_t>(i)] = 1;
                    break;
                }
            }
        });
        BitImage mask(h, w);
        for (int row = 0; row < h; ++row)
            for (int col = 0; col < w; ++col)
                if (hits[static_cast<size_t>(row) * w + col]) mask.set(row, col, true);
        masks.push_back(std::move(mask));
    }
    return masks;
}

#define RAYGRID_INSTANTIATE_AUX(T)                                                        \
    template int occupancy_head<T>(Tape<T>&, TapeBinding<T>&, int,                        \
                                   const backbone::BackboneConfig&);                      \
    template int segmentation_head<T>(Tape<T>&, TapeBinding<T>&, int, int,                \
                                      const backbone::BackboneConfig&);                   \
    template int nvs_render<T>(Tape<T>&, TapeBinding<T>&, int,                            \
                               const geometry::CameraView&,                               \
                               const geometry::VoxelGridSpec&,                            \
                               const backbone::BackboneConfig&);

RAYGRID_INSTANTIATE_AUX(float)
RAYGRID_INSTANTIATE_AUX(double)

#undef RAYGRID_INSTANTIATE_AUX

}  // namespace raygrid::heads
