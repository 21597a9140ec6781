// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <vector>

#include "raygrid/backbone/backbone.hpp"
#include "raygrid/nn/parallel.hpp"

using namespace raygrid;
using namespace raygrid::backbone;
using nn::ParamStore;
using nn::Rng;
using nn::Tape;
using nn::TapeBinding;
using nn::Tensor;

namespace {

geometry::CameraView look_at_view(const Vec3& eye, const Vec3& target, int image_w,
                                  int image_h) {
    const Vec3 fwd = (target - eye).normalized();
    const Vec3 right = fwd.cross(Vec3(0, 0, 1)).normalized();
    const Vec3 down = fwd.cross(right).normalized();
    Mat3 r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = fwd;
    geometry::CameraView view;
    view.intrinsics = {static_cast<double>(image_w), static_cast<double>(image_w),
                       image_w / 2.0, image_h / 2.0, image_w, image_h};
    view.pose = {r, eye};
    view.feature_width = image_w / 16;
    view.feature_height = image_h / 16;
    return view;
}

std::vector<geometry::CameraView> orbit_views(int n, const Vec3& center, double radius,
                                              const BackboneConfig& config) {
    std::vector<geometry::CameraView> views;
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / std::max(n, 1) + 0.37;
        const Vec3 eye = center + Vec3(radius * std::cos(a), radius * std::sin(a),
                                       0.15 * std::sin(2.1 * a));
        views.push_back(look_at_view(eye, center, config.image_width, config.image_height));
    }
    return views;
}

/// Small configuration exercising every code path at unit-test cost.
BackboneConfig tiny_config() {
    BackboneConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_blocks = 1;
    c.ffn_hidden_2d = 3;
    c.ffn_hidden_3d = 3;
    c.grid_dims = {3, 3, 2};
    c.volume_extent = Vec3(1.2, 1.2, 0.8);
    c.image_height = 32;
    c.image_width = 32;
    return c;
}

SceneMasks tiny_masks(const BackboneConfig& config, int n_views) {
    const auto views = orbit_views(n_views, Vec3(0, 0, 0.5), 1.6, config);
    return build_scene_masks(views, config.grid_for(views));
}

template <typename T>
Tensor<T> rand_t(Rng& rng, std::vector<int64_t> shape, double lo = -1.0, double hi = 1.0) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

void randomize_store(ParamStore<double>& store, uint64_t seed, double scale = 0.5) {
    Rng rng(seed);
    for (auto& [name, entry] : store.entries())
        for (auto& v : entry.value.data) v = rng.uniform(-scale, scale);
}

/// Finite-difference check of a full block over every parameter and both
/// input streams.
void check_block_gradients(uint64_t seed) {
    const BackboneConfig config = tiny_config();
    const SceneMasks masks = tiny_masks(config, 1);
    REQUIRE(masks.pixels_to_voxels->nnz() > 0);

    Rng rng(seed);
    const int64_t n_pixels = masks.voxels_to_pixels->n_rows;
    Tensor<double> p_in = rand_t<double>(rng, {n_pixels, config.d_model});
    Tensor<double> v_in = rand_t<double>(rng, {config.n_voxels(), config.d_model});

    ParamStore<double> store(seed);
    const auto eval = [&](bool want_grads, Tensor<double>* dp, Tensor<double>* dv) {
        Tape<double> tape;
        TapeBinding<double> binding(tape, store);
        StreamIds<double> in;
        in.pixels = tape.leaf(p_in);
        in.voxels = tape.leaf(v_in);
        const auto out = block_forward(tape, binding, "b", in, masks, config);
        const int lp = nn::ops::mse_mean(tape, out.pixels, Tensor<double>(tape.val(out.pixels).shape));
        const int lv = nn::ops::mse_mean(tape, out.voxels, Tensor<double>(tape.val(out.voxels).shape));
        const int loss = nn::ops::weighted_sum(tape, {lp, lv}, {1.0, 1.0});
        const double value = tape.val(loss)[0];
        if (want_grads) {
            tape.backward(loss);
            store.zero_grads();
            binding.add_grads();
            *dp = tape.grad(in.pixels);
            *dv = tape.grad(in.voxels);
        }
        return value;
    };

    // Create all parameters, then move them off their zero-heavy init so the
    // attention and feed-forward paths all carry gradient.
    eval(false, nullptr, nullptr);
    randomize_store(store, seed ^ 0x5eedbeef);

    Tensor<double> dp, dv;
    eval(true, &dp, &dv);
    std::vector<Tensor<double>> param_grads;
    std::vector<Tensor<double>*> tensors = {&p_in, &v_in};
    std::vector<const Tensor<double>*> grads = {&dp, &dv};
    for (auto& [name, entry] : store.entries()) {
        tensors.push_back(&entry.value);
        grads.push_back(&entry.grad);
    }

    const double h = 1e-5;
    int checked = 0;
    for (size_t t = 0; t < tensors.size(); ++t) {
        Tensor<double>& x = *tensors[t];
        for (int64_t j = 0; j < x.numel(); ++j) {
            const double keep = x[j];
            x[j] = keep + h;
            const double up = eval(false, nullptr, nullptr);
            x[j] = keep - h;
            const double down = eval(false, nullptr, nullptr);
            x[j] = keep;
            const double fd = (up - down) / (2.0 * h);
            const double got = (*grads[t])[j];
            const double denom = std::max({std::abs(fd), std::abs(got), 1e-6});
            if (std::abs(fd - got) / denom > 1e-4) {
                INFO("tensor ", t, " element ", j, " fd=", fd, " grad=", got);
                CHECK(std::abs(fd - got) / denom <= 1e-4);
            }
            ++checked;
        }
    }
    CHECK(checked > 1000);
}

}  // namespace

TEST_CASE("config presets and validation") {
    const BackboneConfig toy = BackboneConfig::toy();
    toy.validate();
    CHECK(toy.feature_height() == 6);
    CHECK(toy.feature_width() == 8);
    CHECK(toy.n_voxels() == 16 * 16 * 8);

    const BackboneConfig paper = BackboneConfig::paper();
    paper.validate();
    CHECK(paper.feature_height() == 30);
    CHECK(paper.feature_width() == 40);
    CHECK(paper.d_model == 256);
    CHECK(paper.n_heads == 8);
    CHECK(paper.grid_dims == std::array<int, 3>{48, 48, 16});

    BackboneConfig bad = toy;
    bad.d_model = 60;
    CHECK_THROWS_AS(bad.validate(), ValueError);
    bad = toy;
    bad.image_width = 100;
    CHECK_THROWS_AS(bad.validate(), ValueError);
}

TEST_CASE("sincos embedding is bounded and identical across views") {
    const auto emb = sincos_embedding_2d<double>(3, 4, 5, 16);
    CHECK(emb.shape == std::vector<int64_t>({3, 4, 5, 16}));
    for (double v : emb.data) CHECK(std::abs(v) <= 1.0);
    const int64_t per_view = 4 * 5 * 16;
    for (int n = 1; n < 3; ++n)
        for (int64_t i = 0; i < per_view; ++i)
            CHECK(emb[n * per_view + i] == emb[i]);
    // Distinct cells get distinct encodings.
    CHECK(std::memcmp(emb.ptr(), emb.ptr() + 16 * sizeof(double) / sizeof(double),
                      16 * sizeof(double)) != 0);
}

TEST_CASE("parameter store initialization is name keyed") {
    ParamStore<double> a(42), b(42);
    a.xavier("w1", {4, 4}, 4, 4);
    a.normal("e", {8}, 0.02);
    b.normal("e", {8}, 0.02);
    b.xavier("w1", {4, 4}, 4, 4);
    CHECK(a.at("w1").value.data == b.at("w1").value.data);
    CHECK(a.at("e").value.data == b.at("e").value.data);

    ParamStore<double> c(43);
    c.xavier("w1", {4, 4}, 4, 4);
    CHECK(c.at("w1").value.data != a.at("w1").value.data);

    CHECK_THROWS_AS(a.xavier("w1", {5, 4}, 4, 4), ValueError);
    CHECK(a.n_scalars() == 24);
    CHECK(a.ones("g", {3})[0] == 1.0);
    CHECK(a.constant("bias", {2}, 2.5)[1] == 2.5);
    CHECK(a.zeros("z", {2})[0] == 0.0);

    a.at("w1").grad[0] = 7.0;
    a.zero_grads();
    CHECK(a.at("w1").grad[0] == 0.0);
}

TEST_CASE("tape binding reuses ids and accumulates gradients") {
    ParamStore<double> store(1);
    Tape<double> tape;
    TapeBinding<double> binding(tape, store);
    const int w = binding.xavier("w", {2, 2}, 2, 2);
    CHECK(binding.xavier("w", {2, 2}, 2, 2) == w);

    const int x = tape.leaf(Tensor<double>::full({1, 2}, 1.0));
    const int y = nn::ops::matmul(tape, x, w);
    const int loss = nn::ops::mse_mean(tape, y, Tensor<double>({1, 2}));
    tape.backward(loss);
    store.zero_grads();
    binding.add_grads();
    binding.add_grads();
    const auto& g = store.at("w").grad;
    CHECK(g.numel() == 4);
    CHECK(g[0] == doctest::Approx(2.0 * tape.grad(w)[0]));
}

TEST_CASE("image encoder reduces 16x and maps zero to zero") {
    BackboneConfig config = tiny_config();
    ParamStore<float> store(7);
    Tape<float> tape;
    TapeBinding<float> binding(tape, store);

    Rng rng(3);
    const auto images = rand_t<float>(rng, {2, config.image_height, config.image_width, 3});
    const int p0 = encode_images(tape, binding, images, config);
    CHECK(tape.val(p0).shape ==
          std::vector<int64_t>({2, config.feature_height(), config.feature_width(),
                                config.d_model}));
    CHECK(tape.val(p0).all_finite());

    Tape<float> tape2;
    TapeBinding<float> binding2(tape2, store);
    const Tensor<float> zero({1, config.image_height, config.image_width, 3});
    const int z = encode_images(tape2, binding2, zero, config);
    for (float v : tape2.val(z).data) CHECK(v == 0.0f);

    CHECK_THROWS_AS(
        encode_images(tape2, binding2, Tensor<float>({1, 16, 32, 3}), config),
        ValueError);
}

TEST_CASE("freshly initialized block is the identity map") {
    const BackboneConfig config = tiny_config();
    const SceneMasks masks = tiny_masks(config, 2);
    ParamStore<double> store(11);
    Tape<double> tape;
    TapeBinding<double> binding(tape, store);

    Rng rng(4);
    const int64_t n_pixels = masks.voxels_to_pixels->n_rows;
    const auto p_in = rand_t<double>(rng, {n_pixels, config.d_model});
    const auto v_in = rand_t<double>(rng, {config.n_voxels(), config.d_model});
    StreamIds<double> in;
    in.pixels = tape.leaf(p_in);
    in.voxels = tape.leaf(v_in);
    const auto out = block_forward(tape, binding, "b", in, masks, config);
    CHECK(tape.val(out.pixels).data == p_in.data);
    CHECK(tape.val(out.voxels).data == v_in.data);
}

TEST_CASE("voxel updates depend only on pixels whose rays cross them") {
    const BackboneConfig config = tiny_config();
    const SceneMasks masks = tiny_masks(config, 1);
    const auto& mask = *masks.pixels_to_voxels;

    // A voxel with a strict subset of the pixels, and a pixel outside it.
    int voxel = -1, outside_pixel = -1;
    for (int64_t r = 0; r < mask.n_rows && voxel < 0; ++r) {
        const int64_t begin = mask.row_offsets[static_cast<size_t>(r)];
        const int64_t end = mask.row_offsets[static_cast<size_t>(r) + 1];
        if (end == begin || end - begin == mask.n_cols) continue;
        for (int64_t c = 0; c < mask.n_cols; ++c) {
            const auto* first = mask.col_index.data() + begin;
            const auto* last = mask.col_index.data() + end;
            if (std::find(first, last, static_cast<int32_t>(c)) == last) {
                voxel = static_cast<int>(r);
                outside_pixel = static_cast<int>(c);
                break;
            }
        }
    }
    REQUIRE(voxel >= 0);

    ParamStore<double> store(12);
    Rng rng(5);
    const int64_t n_pixels = mask.n_cols;
    Tensor<double> p_in = rand_t<double>(rng, {n_pixels, config.d_model});
    const auto v_in = rand_t<double>(rng, {config.n_voxels(), config.d_model});

    const auto run = [&](const Tensor<double>& pixels) {
        Tape<double> tape;
        TapeBinding<double> binding(tape, store);
        StreamIds<double> in;
        in.pixels = tape.leaf(pixels);
        in.voxels = tape.leaf(v_in);
        const auto out = block_forward(tape, binding, "b", in, masks, config);
        return tape.val(out.voxels);
    };

    run(p_in);  // create parameters
    randomize_store(store, 99);
    // Zero the feed-forward tail again so voxel rows stay independent.
    for (auto& [name, entry] : store.entries())
        if (name.find(".ffn_") != std::string::npos)
            std::fill(entry.value.data.begin(), entry.value.data.end(), 0.0);

    const auto base = run(p_in);
    p_in[static_cast<int64_t>(outside_pixel) * config.d_model] += 0.7;
    const auto changed = run(p_in);

    for (int c = 0; c < config.d_model; ++c)
        CHECK(changed[voxel * config.d_model + c] == base[voxel * config.d_model + c]);
    double diff = 0.0;
    for (int64_t i = 0; i < base.numel(); ++i) diff += std::abs(changed[i] - base[i]);
    CHECK(diff > 0.0);
}

TEST_CASE("block gradients match finite differences") {
    for (uint64_t seed : {101u, 102u, 103u, 104u, 105u}) check_block_gradients(seed);
}

TEST_CASE("unprojection initializes voxels with covering-pixel means") {
    BackboneConfig config = tiny_config();
    config.positional_encoding = false;
    config.n_blocks = 0;
    const SceneMasks masks = tiny_masks(config, 2);

    ParamStore<double> store(21);
    Tape<double> tape;
    TapeBinding<double> binding(tape, store);
    Rng rng(6);
    const auto images =
        rand_t<double>(rng, {2, config.image_height, config.image_width, 3});
    const auto out = backbone_forward(tape, binding, images, masks, config);

    const auto& p = tape.val(out.pixels);
    const auto& v = tape.val(out.voxels);
    const auto& mask = *masks.pixels_to_voxels;
    for (int64_t r = 0; r < mask.n_rows; ++r) {
        const int64_t begin = mask.row_offsets[static_cast<size_t>(r)];
        const int64_t end = mask.row_offsets[static_cast<size_t>(r) + 1];
        for (int c = 0; c < config.d_model; ++c) {
            double mean = 0.0;
            for (int64_t e = begin; e < end; ++e)
                mean += p[static_cast<int64_t>(mask.col_index[static_cast<size_t>(e)]) *
                              config.d_model +
                          c];
            if (end > begin) mean /= static_cast<double>(end - begin);
            CHECK(v[r * config.d_model + c] == doctest::Approx(mean).epsilon(1e-12));
        }
    }
}

TEST_CASE("doubling identical views leaves the initial volume unchanged") {
    BackboneConfig config = tiny_config();
    config.positional_encoding = false;
    config.n_blocks = 0;
    const auto views = orbit_views(2, Vec3(0, 0, 0.5), 1.6, config);
    auto doubled = views;
    doubled.insert(doubled.end(), views.begin(), views.end());
    const auto grid = config.grid_for(views);

    ParamStore<double> store(22);
    Rng rng(8);
    const auto images =
        rand_t<double>(rng, {2, config.image_height, config.image_width, 3});
    Tensor<double> images2({4, config.image_height, config.image_width, 3});
    std::copy(images.data.begin(), images.data.end(), images2.data.begin());
    std::copy(images.data.begin(), images.data.end(),
              images2.data.begin() + images.numel());

    Tape<double> tape;
    TapeBinding<double> binding(tape, store);
    const auto single =
        backbone_forward(tape, binding, images, build_scene_masks(views, grid), config);
    Tape<double> tape2;
    TapeBinding<double> binding2(tape2, store);
    const auto twice = backbone_forward(tape2, binding2, images2,
                                        build_scene_masks(doubled, grid), config);

    const auto& a = tape.val(single.voxels);
    const auto& b = tape2.val(twice.voxels);
    REQUIRE(a.numel() == b.numel());
    for (int64_t i = 0; i < a.numel(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("volume features are invariant to view order") {
    BackboneConfig config = tiny_config();
    config.n_blocks = 2;
    const auto views = orbit_views(3, Vec3(0, 0, 0.5), 1.6, config);
    const auto grid = config.grid_for(views);

    ParamStore<double> store(31);
    Rng rng(9);
    const auto images =
        rand_t<double>(rng, {3, config.image_height, config.image_width, 3});

    const auto run = [&](const std::vector<int>& order) {
        std::vector<geometry::CameraView> permuted;
        Tensor<double> perm_images({3, config.image_height, config.image_width, 3});
        const int64_t per_view = images.numel() / 3;
        for (size_t i = 0; i < order.size(); ++i) {
            permuted.push_back(views[static_cast<size_t>(order[i])]);
            std::copy(images.data.begin() + order[i] * per_view,
                      images.data.begin() + (order[i] + 1) * per_view,
                      perm_images.data.begin() + static_cast<int64_t>(i) * per_view);
        }
        Tape<double> tape;
        TapeBinding<double> binding(tape, store);
        const auto out = backbone_forward(tape, binding, perm_images,
                                          build_scene_masks(permuted, grid), config);
        return tape.val(out.voxels);
    };

    // Pin the parameters once so every permutation sees identical weights.
    run({0, 1, 2});
    randomize_store(store, 77, 0.3);

    const auto base = run({0, 1, 2});
    for (const auto& order : {std::vector<int>{2, 0, 1}, std::vector<int>{1, 2, 0}}) {
        const auto v = run(order);
        for (int64_t i = 0; i < base.numel(); ++i)
            CHECK(v[i] == doctest::Approx(base[i]).epsilon(1e-6));
    }
}

TEST_CASE("one parameter set serves any view count") {
    BackboneConfig config = tiny_config();
    ParamStore<float> store(41);
    Rng rng(10);
    int64_t created = -1;
    for (int n : {1, 2, 4}) {
        const SceneMasks masks = tiny_masks(config, n);
        Tape<float> tape;
        TapeBinding<float> binding(tape, store);
        const auto images =
            rand_t<float>(rng, {n, config.image_height, config.image_width, 3});
        const auto out = backbone_forward(tape, binding, images, masks, config);
        CHECK(tape.val(out.pixels).all_finite());
        CHECK(tape.val(out.voxels).all_finite());
        CHECK(tape.val(out.pixels).dim(0) ==
              static_cast<int64_t>(n) * config.feature_height() * config.feature_width());
        if (created < 0) created = store.n_scalars();
        CHECK(store.n_scalars() == created);
    }
}

TEST_CASE("backbone forward is deterministic across runs and worker counts") {
    const BackboneConfig config = tiny_config();
    const SceneMasks masks = tiny_masks(config, 2);
    Rng rng(13);
    const auto images =
        rand_t<float>(rng, {2, config.image_height, config.image_width, 3});

    const auto run = [&](int threads) {
        nn::set_num_threads(threads);
        ParamStore<float> store(55);
        Tape<float> tape;
        TapeBinding<float> binding(tape, store);
        const auto out = backbone_forward(tape, binding, images, masks, config);
        std::pair<Tensor<float>, Tensor<float>> result = {tape.val(out.pixels),
                                                          tape.val(out.voxels)};
        nn::set_num_threads(0);
        return result;
    };

    const auto a = run(1);
    const auto b = run(1);
    const auto c = run(4);
    CHECK(a.first.data == b.first.data);
    CHECK(a.second.data == b.second.data);
    CHECK(a.first.data == c.first.data);
    CHECK(a.second.data == c.second.data);
}

TEST_CASE("mismatched masks are rejected") {
    const BackboneConfig config = tiny_config();
    BackboneConfig other = config;
    other.grid_dims = {4, 4, 2};
    const SceneMasks masks = tiny_masks(other, 1);

    ParamStore<float> store(61);
    Tape<float> tape;
    TapeBinding<float> binding(tape, store);
    Rng rng(14);
    const auto images =
        rand_t<float>(rng, {1, config.image_height, config.image_width, 3});
    CHECK_THROWS_AS(backbone_forward(tape, binding, images, masks, config), ValueError);
}
