// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/backbone/backbone.hpp"

#include <cmath>

namespace raygrid::backbone {

BackboneConfig BackboneConfig::toy() { return {}; }

BackboneConfig BackboneConfig::paper() {
    BackboneConfig c;
    c.d_model = 256;
    c.n_heads = 8;
    c.n_blocks = 4;
    c.ffn_hidden_2d = 256;
    c.ffn_hidden_3d = 256;
    c.grid_dims = {48, 48, 16};
    c.volume_extent = Vec3(9.0, 9.0, 3.5);
    c.image_height = 480;
    c.image_width = 640;
    return c;
}

void BackboneConfig::validate() const {
    detail::check(d_model > 0 && n_heads > 0 && d_model % n_heads == 0,
                  "d_model must be a positive multiple of n_heads");
    detail::check(d_model % 8 == 0, "d_model must be divisible by 8");
    detail::check(n_blocks >= 0, "n_blocks must be >= 0");
    detail::check(ffn_hidden_2d > 0 && ffn_hidden_3d > 0, "FFN widths must be positive");
    detail::check(grid_dims[0] > 0 && grid_dims[1] > 0 && grid_dims[2] > 0,
                  "grid dims must be positive");
    detail::check(volume_extent.minCoeff() > 0.0, "volume extent must be positive");
    detail::check(image_height > 0 && image_height % 16 == 0 && image_width > 0 &&
                      image_width % 16 == 0,
                  "image size must be a positive multiple of 16");
}

geometry::VoxelGridSpec BackboneConfig::grid_for(
    std::span<const geometry::CameraView> views) const {
    return geometry::center_volume(views, volume_extent, grid_dims);
}

SceneMasks build_scene_masks(std::span<const geometry::CameraView> views,
                             const geometry::VoxelGridSpec& grid) {
    detail::check(!views.empty(), "build_scene_masks: no views");
    const auto index = geometry::build_interaction_index(views, grid);
    SceneMasks masks;
    masks.pixels_to_voxels = std::make_shared<sparse::SparseMask>(
        sparse::SparseMask::from_index(index, sparse::Direction::kPixelsToVoxels));
    masks.voxels_to_pixels = std::make_shared<sparse::SparseMask>(
        sparse::SparseMask::from_index(index, sparse::Direction::kVoxelsToPixels));
    masks.grid = grid;
    masks.n_views = static_cast<int>(views.size());
    masks.feature_height = index.feature_height;
    masks.feature_width = index.feature_width;
    return masks;
}

template <typename T>
Tensor<T> sincos_embedding_2d(int n_views, int height, int width, int d_model) {
    detail::check(d_model % 4 == 0, "sincos embedding needs d_model divisible by 4");
    const int quarter = d_model / 4;
    Tensor<T> out({n_views, height, width, d_model});
    std::vector<double> freq(static_cast<size_t>(quarter));
    for (int i = 0; i < quarter; ++i)
        freq[static_cast<size_t>(i)] =
            std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(quarter));
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            T* cell = out.ptr() + (static_cast<int64_t>(r) * width + c) * d_model;
            for (int i = 0; i < quarter; ++i) {
                cell[i] = static_cast<T>(std::sin(c * freq[static_cast<size_t>(i)]));
                cell[quarter + i] = static_cast<T>(std::cos(c * freq[static_cast<size_t>(i)]));
                cell[2 * quarter + i] =
                    static_cast<T>(std::sin(r * freq[static_cast<size_t>(i)]));
                cell[3 * quarter + i] =
                    static_cast<T>(std::cos(r * freq[static_cast<size_t>(i)]));
            }
        }
    const int64_t per_view = static_cast<int64_t>(height) * width * d_model;
    for (int n = 1; n < n_views; ++n)
        std::copy(out.ptr(), out.ptr() + per_view, out.ptr() + n * per_view);
    return out;
}

template <typename T>
nn::ops::AttentionVars<T> attention_vars(TapeBinding<T>& params, const std::string& prefix,
                                         int d_model, int n_heads) {
    detail::check(d_model > 0 && n_heads > 0 && d_model % n_heads == 0,
                  "attention needs d_model to be a positive multiple of n_heads");
    const int64_t d = d_model;
    nn::ops::AttentionVars<T> vars;
    vars.wq = params.xavier(prefix + ".wq", {d, d}, d, d);
    vars.wk = params.xavier(prefix + ".wk", {d, d}, d, d);
    vars.wv = params.xavier(prefix + ".wv", {d, d}, d, d);
    vars.wo = params.zeros(prefix + ".wo", {d, d});
    vars.n_heads = n_heads;
    vars.d_head = d_model / n_heads;
    return vars;
}

template <typename T>
int conv_ffn(Tape<T>& tape, TapeBinding<T>& params, const std::string& prefix, int x,
             int rank, int64_t channels, int64_t hidden) {
    const int64_t taps = rank == 2 ? 9 : 27;
    std::vector<int64_t> w1_shape = {hidden, 3, 3, channels};
    std::vector<int64_t> w2_shape = {channels, 3, 3, hidden};
    if (rank == 3) {
        w1_shape.insert(w1_shape.begin() + 3, 3);
        w2_shape.insert(w2_shape.begin() + 3, 3);
    }
    const int w1 = params.xavier(prefix + ".w1", std::move(w1_shape), taps * channels,
                                 taps * hidden);
    const int b1 = params.zeros(prefix + ".b1", {hidden});
    const int gamma = params.ones(prefix + ".ln.gamma", {hidden});
    const int beta = params.zeros(prefix + ".ln.beta", {hidden});
    const int w2 = params.zeros(prefix + ".w2", std::move(w2_shape));
    const int b2 = params.zeros(prefix + ".b2", {channels});
    const nn::ConvSpec spec = nn::ConvSpec::make(rank, 3, 1, 1);
    int h = nn::ops::conv_nd(tape, x, w1, b1, spec);
    h = nn::ops::layer_norm(tape, h, gamma, beta);
    h = nn::ops::relu(tape, h);
    return nn::ops::conv_nd(tape, h, w2, b2, spec);
}

namespace {

void check_masks(const SceneMasks& masks, const BackboneConfig& config) {
    detail::check(masks.pixels_to_voxels && masks.voxels_to_pixels,
                  "scene masks not built");
    detail::check(masks.grid.dims == config.grid_dims, "mask grid does not match config");
    detail::check(masks.feature_height == config.feature_height() &&
                      masks.feature_width == config.feature_width(),
                  "mask feature size does not match config");
    const int64_t n_pixels = static_cast<int64_t>(masks.n_views) * masks.feature_height *
                             masks.feature_width;
    detail::check(masks.pixels_to_voxels->n_rows == config.n_voxels() &&
                      masks.pixels_to_voxels->n_cols == n_pixels &&
                      masks.voxels_to_pixels->n_rows == n_pixels &&
                      masks.voxels_to_pixels->n_cols == config.n_voxels(),
                  "mask dimensions do not match scene");
}

}  // namespace

template <typename T>
int encode_images(Tape<T>& tape, TapeBinding<T>& params, const Tensor<T>& images,
                  const BackboneConfig& config) {
    config.validate();
    detail::check(images.rank() == 4 && images.dim(0) >= 1 &&
                      images.dim(1) == config.image_height &&
                      images.dim(2) == config.image_width && images.dim(3) == 3,
                  "images must be [n_views, height, width, 3]");
    nn::check_finite(images, "images");
    const int64_t d = config.d_model;
    const std::array<int64_t, 5> channels = {3, d / 8, d / 4, d / 2, d};
    int x = tape.leaf(images);
    for (int layer = 0; layer < 4; ++layer) {
        const std::string prefix = "encoder.conv" + std::to_string(layer + 1);
        const int64_t ci = channels[static_cast<size_t>(layer)];
        const int64_t co = channels[static_cast<size_t>(layer + 1)];
        const int w = params.xavier(prefix + ".w", {co, 3, 3, ci}, 9 * ci, 9 * co);
        const int b = params.zeros(prefix + ".b", {co});
        x = nn::ops::conv_nd(tape, x, w, b, nn::ConvSpec::make(2, 3, 2, 1));
        if (layer < 3) x = nn::ops::relu(tape, x);
    }
    const int gamma = params.ones("encoder.ln.gamma", {d});
    const int beta = params.zeros("encoder.ln.beta", {d});
    return nn::ops::layer_norm(tape, x, gamma, beta);
}

template <typename T>
StreamIds<T> init_streams(Tape<T>& tape, TapeBinding<T>& params, int p0,
                          const SceneMasks& masks, const BackboneConfig& config) {
    check_masks(masks, config);
    const int64_t d = config.d_model;
    const int64_t n_pixels = masks.voxels_to_pixels->n_rows;
    int p = p0;
    if (config.positional_encoding) {
        p = nn::ops::add_const(
            tape, p,
            sincos_embedding_2d<T>(masks.n_views, masks.feature_height,
                                   masks.feature_width, config.d_model));
        p = nn::ops::add_bias(tape, p, params.normal("posenc.view", {d}, 0.02));
    }
    StreamIds<T> out;
    out.pixels = nn::ops::reshape(tape, p, {n_pixels, d});
    out.voxels = nn::ops::unproject_mean(tape, out.pixels, masks.pixels_to_voxels);
    if (config.positional_encoding) {
        const int embed = params.normal("posenc.voxel", {config.n_voxels(), d}, 0.02);
        out.voxels = nn::ops::add(tape, out.voxels, embed);
    }
    return out;
}

template <typename T>
StreamIds<T> block_forward(Tape<T>& tape, TapeBinding<T>& params,
                           const std::string& prefix, const StreamIds<T>& in,
                           const SceneMasks& masks, const BackboneConfig& config) {
    check_masks(masks, config);
    const int64_t d = config.d_model;
    const int64_t nx = config.grid_dims[0], ny = config.grid_dims[1],
                  nz = config.grid_dims[2];

    // Voxel stream: attend to all pixels on crossing rays, then a 3D FFN.
    const auto vars_3d = attention_vars(params, prefix + ".attn_2d3d", config.d_model, config.n_heads);
    const int v_att =
        nn::ops::sparse_mha(tape, in.voxels, in.pixels, masks.pixels_to_voxels, vars_3d);
    const int v1 = nn::ops::add(tape, in.voxels, v_att);
    const int v_grid = nn::ops::reshape(tape, v1, {1, nz, ny, nx, d});
    const int v_ffn =
        conv_ffn(tape, params, prefix + ".ffn_3d", v_grid, 3, d, config.ffn_hidden_3d);
    const int v2 = nn::ops::add(tape, v_grid, v_ffn);

    // Pixel stream, reading the block-input voxels (parallel streams).
    const auto vars_2d = attention_vars(params, prefix + ".attn_3d2d", config.d_model, config.n_heads);
    const int p_att =
        nn::ops::sparse_mha(tape, in.pixels, in.voxels, masks.voxels_to_pixels, vars_2d);
    const int p1 = nn::ops::add(tape, in.pixels, p_att);
    const int p_grid = nn::ops::reshape(
        tape, p1,
        {masks.n_views, masks.feature_height, masks.feature_width, d});
    const int p_ffn =
        conv_ffn(tape, params, prefix + ".ffn_2d", p_grid, 2, d, config.ffn_hidden_2d);
    const int p2 = nn::ops::add(tape, p_grid, p_ffn);

    StreamIds<T> out;
    out.voxels = nn::ops::reshape(tape, v2, {nx * ny * nz, d});
    out.pixels = nn::ops::reshape(
        tape, p2, {static_cast<int64_t>(masks.n_views) * masks.feature_height *
                       masks.feature_width,
                   d});
    return out;
}

template <typename T>
StreamIds<T> backbone_forward(Tape<T>& tape, TapeBinding<T>& params,
                              const Tensor<T>& images, const SceneMasks& masks,
                              const BackboneConfig& config) {
    detail::check(images.dim(0) == masks.n_views, "image count does not match masks");
    const int p0 = encode_images(tape, params, images, config);
    StreamIds<T> streams = init_streams(tape, params, p0, masks, config);
    for (int b = 0; b < config.n_blocks; ++b)
        streams = block_forward(tape, params, "block" + std::to_string(b), streams, masks,
                                config);
    return streams;
}

#define RAYGRID_INSTANTIATE_BACKBONE(T)                                                  \
    template Tensor<T> sincos_embedding_2d<T>(int, int, int, int);                       \
    template nn::ops::AttentionVars<T> attention_vars<T>(TapeBinding<T>&,                \
                                                         const std::string&, int, int); \
    template int conv_ffn<T>(Tape<T>&, TapeBinding<T>&, const std::string&, int, int,    \
                             int64_t, int64_t);                                          \
    template int encode_images<T>(Tape<T>&, TapeBinding<T>&, const Tensor<T>&,           \
                                  const BackboneConfig&);                                \
    template StreamIds<T> init_streams<T>(Tape<T>&, TapeBinding<T>&, int,                \
                                          const SceneMasks&, const BackboneConfig&);     \
    template StreamIds<T> block_forward<T>(Tape<T>&, TapeBinding<T>&,                    \
                                           const std::string&, const StreamIds<T>&,     \
                                           const SceneMasks&, const BackboneConfig&);    \
    template StreamIds<T> backbone_forward<T>(Tape<T>&, TapeBinding<T>&,                 \
                                              const Tensor<T>&, const SceneMasks&,      \
                                              const BackboneConfig&);

RAYGRID_INSTANTIATE_BACKBONE(float)
RAYGRID_INSTANTIATE_BACKBONE(double)

#undef RAYGRID_INSTANTIATE_BACKBONE

}  // namespace raygrid::backbone
