// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>

#include "raygrid/geometry/camera.hpp"
#include "raygrid/geometry/interaction.hpp"
#include "raygrid/geometry/voxel_grid.hpp"
#include "raygrid/nn/rng.hpp"

using namespace raygrid;
using namespace raygrid::geometry;
using raygrid::nn::Rng;

namespace {

Mat3 rotation_from_euler(double a, double b, double c) {
    return (Eigen::AngleAxisd(a, Vec3::UnitZ()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
            Eigen::AngleAxisd(c, Vec3::UnitX()))
        .toRotationMatrix();
}

CameraView random_view(Rng& rng) {
    CameraView view;
    view.intrinsics.width = 64;
    view.intrinsics.height = 48;
    view.intrinsics.fx = rng.uniform(40.0, 120.0);
    view.intrinsics.fy = rng.uniform(40.0, 120.0);
    view.intrinsics.cx = rng.uniform(24.0, 40.0);
    view.intrinsics.cy = rng.uniform(18.0, 30.0);
    view.feature_width = 8;
    view.feature_height = 6;
    view.pose.rotation = rotation_from_euler(rng.uniform(-kPi, kPi),
                                             rng.uniform(-kPi, kPi),
                                             rng.uniform(-kPi, kPi));
    view.pose.translation =
        Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    return view;
}

VoxelGridSpec random_grid(Rng& rng) {
    VoxelGridSpec grid;
    grid.dims = {rng.uniform_int(3, 8), rng.uniform_int(3, 8), rng.uniform_int(3, 8)};
    grid.voxel_size = Vec3(rng.uniform(0.3, 1.2), rng.uniform(0.3, 1.2),
                           rng.uniform(0.3, 1.2));
    grid.origin = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    return grid;
}

Ray random_ray(Rng& rng, const VoxelGridSpec& grid) {
    Ray ray;
    const Vec3 center = grid.origin + grid.extent() / 2.0;
    ray.origin = center + Vec3(rng.uniform(-6, 6), rng.uniform(-6, 6),
                               rng.uniform(-6, 6));
    Vec3 target = grid.origin + Vec3(rng.uniform(0, 1) * grid.extent().x(),
                                     rng.uniform(0, 1) * grid.extent().y(),
                                     rng.uniform(0, 1) * grid.extent().z());
    ray.direction = (target - ray.origin).normalized();
    ray.t_near = rng.uniform(0.0, 0.2);
    ray.t_far = 100.0;
    return ray;
}

int v_comp(const VoxelCoord& v, int a) { return a == 0 ? v.x : a == 1 ? v.y : v.z; }

/// Ray/box overlap interval within [t_near, t_far] by slab intersection,
/// independent of the traversal implementation. Returns {t0, t1}; empty when
/// t0 >= t1.
std::pair<double, double> slab_interval(const Ray& ray, const Vec3& lo,
                                        const Vec3& hi) {
    double t0 = ray.t_near;
    double t1 = ray.t_far;
    for (int a = 0; a < 3; ++a) {
        const double d = ray.direction[a];
        const double o = ray.origin[a];
        if (d == 0.0) {
            if (o < lo[a] || o >= hi[a]) return {1.0, 0.0};
            continue;
        }
        double ta = (lo[a] - o) / d;
        double tb = (hi[a] - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return {t0, t1};
}

double slab_chord(const Ray& ray, const VoxelGridSpec& grid, const VoxelCoord& v) {
    const Vec3 lo = grid.origin + Vec3(v_comp(v, 0) * grid.voxel_size.x(),
                                       v_comp(v, 1) * grid.voxel_size.y(),
                                       v_comp(v, 2) * grid.voxel_size.z());
    const auto [t0, t1] = slab_interval(ray, lo, lo + grid.voxel_size);
    return std::max(0.0, t1 - t0);
}

/// Voxel set from dense sampling along the ray. Returns nullopt when the ray
/// is ill-conditioned for sampling: some voxel overlap is shorter than
/// min_chord, so a fixed step could miss it.
std::optional<std::set<int64_t>> sampled_voxel_set(const Ray& ray,
                                                  const VoxelGridSpec& grid,
                                                  double step_scale = 1e-3) {
    const double step = step_scale * grid.voxel_size.minCoeff();
    const double min_chord = 4.0 * step;
    for (int z = 0; z < grid.dims[2]; ++z)
        for (int y = 0; y < grid.dims[1]; ++y)
            for (int x = 0; x < grid.dims[0]; ++x) {
                const double chord = slab_chord(ray, grid, {x, y, z});
                if (chord > 0.0 && chord < min_chord) return std::nullopt;
            }
    const double eps = 1e-9 * grid.voxel_size.minCoeff();
    const auto [box0, box1] = slab_interval(ray, grid.origin, grid.max_corner());
    if (box0 >= box1) return std::set<int64_t>{};
    const double t_begin = std::max(ray.t_near, box0 - 2.0 * step);
    const double t_end = std::min(ray.t_far, box1 + 2.0 * step);
    std::set<int64_t> out;
    for (double t = t_begin; t <= t_end; t += step) {
        const Vec3 p = ray.origin + t * ray.direction;
        bool inside = true;
        bool near_plane = false;
        VoxelCoord c;
        for (int a = 0; a < 3; ++a) {
            const double frac = (p[a] - grid.origin[a]) / grid.voxel_size[a];
            if (frac < 0.0 || frac >= grid.dims[a]) {
                inside = false;
                break;
            }
            const double cell = std::floor(frac);
            // Drop samples so close to a lattice plane that rounding decides
            // the cell.
            if (std::abs(frac - cell) * grid.voxel_size[a] < eps ||
                std::abs(frac - cell - 1.0) * grid.voxel_size[a] < eps) {
                near_plane = true;
                break;
            }
            (a == 0 ? c.x : a == 1 ? c.y : c.z) = static_cast<int>(cell);
        }
        if (inside && !near_plane) out.insert(grid.flat_index(c));
    }
    return out;
}

}  // namespace

TEST_CASE("pixel rays have unit direction and positive clip range") {
    Rng rng(101);
    for (int i = 0; i < 100; ++i) {
        const CameraView view = random_view(rng);
        const int r = rng.uniform_int(0, view.feature_height - 1);
        const int c = rng.uniform_int(0, view.feature_width - 1);
        const Ray ray = pixel_ray(view, r, c);
        CHECK(ray.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ray.t_near > 0.0);
        CHECK(ray.t_far > ray.t_near);
        CHECK((ray.origin - view.pose.translation).norm() == 0.0);
    }
}

TEST_CASE("points sampled along a pixel ray project back to that feature cell") {
    Rng rng(102);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const CameraView view = random_view(rng);
        const int r = rng.uniform_int(0, view.feature_height - 1);
        const int c = rng.uniform_int(0, view.feature_width - 1);
        const Ray ray = pixel_ray(view, r, c);
        const double t = rng.uniform(ray.t_near, ray.t_far);
        const Vec3 p = ray.origin + t * ray.direction;
        int pr = -1, pc = -1;
        REQUIRE(project_to_feature_cell(view, p, pr, pc));
        CHECK(pr == r);
        CHECK(pc == c);
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("points behind the camera do not project") {
    Rng rng(103);
    const CameraView view = random_view(rng);
    const Ray ray = pixel_ray(view, 2, 3);
    const Vec3 behind = ray.origin - 1.0 * ray.direction;
    int r, c;
    CHECK_FALSE(project_to_feature_cell(view, behind, r, c));
}

TEST_CASE("traversal of an axis-aligned ray lists cells in order") {
    VoxelGridSpec grid;
    grid.dims = {4, 4, 4};
    grid.voxel_size = Vec3::Ones();
    grid.origin = Vec3::Zero();
    Ray ray;
    ray.origin = Vec3(-1.0, 0.5, 0.5);
    ray.direction = Vec3(1, 0, 0);
    ray.t_near = 0.01;
    ray.t_far = 50.0;
    const auto cells = traverse_voxels(ray, grid);
    REQUIRE(cells.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(cells[i] == VoxelCoord{i, 0, 0});
    }
}

TEST_CASE("a ray on a shared face reports only the closed-side cells") {
    VoxelGridSpec grid;
    grid.dims = {4, 4, 2};
    grid.voxel_size = Vec3::Ones();
    grid.origin = Vec3::Zero();
    Ray ray;
    ray.origin = Vec3(-1.0, 2.0, 0.5);  // exactly on the y=2 face
    ray.direction = Vec3(1, 0, 0);
    ray.t_near = 0.01;
    ray.t_far = 50.0;
    const auto cells = traverse_voxels(ray, grid);
    REQUIRE(cells.size() == 4);
    for (const auto& c : cells) CHECK(c.y == 2);
}

TEST_CASE("rays that miss the grid or stop short of it produce no cells") {
    VoxelGridSpec grid;
    grid.dims = {4, 4, 4};
    grid.voxel_size = Vec3::Ones();
    grid.origin = Vec3::Zero();
    Ray miss;
    miss.origin = Vec3(-1.0, 10.0, 0.5);
    miss.direction = Vec3(1, 0, 0);
    miss.t_near = 0.01;
    miss.t_far = 50.0;
    CHECK(traverse_voxels(miss, grid).empty());
    Ray short_ray;
    short_ray.origin = Vec3(-5.0, 0.5, 0.5);
    short_ray.direction = Vec3(1, 0, 0);
    short_ray.t_near = 0.01;
    short_ray.t_far = 1.0;
    CHECK(traverse_voxels(short_ray, grid).empty());
}

TEST_CASE("traversal matches a dense-sampling oracle on 1000 random rays") {
    Rng rng(104);
    int accepted = 0;
    while (accepted < 1000) {
        const VoxelGridSpec grid = random_grid(rng);
        const Ray ray = random_ray(rng, grid);
        const auto oracle = sampled_voxel_set(ray, grid);
        if (!oracle) continue;  // sliver overlap, ill-conditioned for sampling
        ++accepted;
        const auto cells = traverse_voxels(ray, grid);
        std::set<int64_t> got;
        for (const auto& c : cells) got.insert(grid.flat_index(c));
        REQUIRE(got.size() == cells.size());  // no duplicates
        CHECK(got == *oracle);
    }
}

TEST_CASE("per-ray voxel count never exceeds nx+ny+nz") {
    Rng rng(105);
    for (int i = 0; i < 2000; ++i) {
        const VoxelGridSpec grid = random_grid(rng);
        const Ray ray = random_ray(rng, grid);
        const auto cells = traverse_voxels(ray, grid);
        CHECK(static_cast<int>(cells.size()) <=
              grid.dims[0] + grid.dims[1] + grid.dims[2]);
    }
}

TEST_CASE("consecutive traversed cells are face neighbors") {
    Rng rng(106);
    for (int i = 0; i < 500; ++i) {
        const VoxelGridSpec grid = random_grid(rng);
        const Ray ray = random_ray(rng, grid);
        const auto cells = traverse_voxels(ray, grid);
        for (size_t k = 1; k < cells.size(); ++k) {
            const int dx = std::abs(cells[k].x - cells[k - 1].x);
            const int dy = std::abs(cells[k].y - cells[k - 1].y);
            const int dz = std::abs(cells[k].z - cells[k - 1].z);
            CHECK(dx + dy + dz == 1);
        }
    }
}

TEST_CASE("center_volume centers the grid on the camera centroid") {
    Rng rng(107);
    std::vector<CameraView> views;
    Vec3 centroid = Vec3::Zero();
    for (int i = 0; i < 7; ++i) {
        views.push_back(random_view(rng));
        centroid += views.back().pose.translation;
    }
    centroid /= 7.0;
    const Vec3 extent(9.0, 9.0, 3.5);
    const VoxelGridSpec grid = center_volume(views, extent, {48, 48, 16});
    const Vec3 grid_center = grid.origin + grid.extent() / 2.0;
    CHECK((grid_center - centroid).norm() < 1e-12);
    CHECK((grid.extent() - extent).norm() < 1e-12);
    CHECK(grid.voxel_size.x() == doctest::Approx(9.0 / 48));
    CHECK(grid.voxel_size.z() == doctest::Approx(3.5 / 16));
}

namespace {

std::vector<CameraView> orbit_views(int n, const Vec3& center, double radius,
                                    double height) {
    // Cameras on a circle looking at the center point, z up.
    std::vector<CameraView> views;
    for (int i = 0; i < n; ++i) {
        const double ang = 2.0 * kPi * i / n;
        CameraView view;
        view.intrinsics.width = 128;
        view.intrinsics.height = 96;
        view.intrinsics.fx = 110.0;
        view.intrinsics.fy = 110.0;
        view.intrinsics.cx = 64.0;
        view.intrinsics.cy = 48.0;
        view.feature_width = 8;
        view.feature_height = 6;
        view.pose.translation =
            center + Vec3(radius * std::cos(ang), radius * std::sin(ang), height);
        const Vec3 fwd = (center - view.pose.translation).normalized();
        const Vec3 right = fwd.cross(Vec3::UnitZ()).normalized();
        const Vec3 down = fwd.cross(right).normalized();
        Mat3 rot;
        rot.col(0) = right;
        rot.col(1) = down;
        rot.col(2) = fwd;
        view.pose.rotation = rot;
        view.validate();
        views.push_back(view);
    }
    return views;
}

}  // namespace

TEST_CASE("interaction index matches a brute-force pixel-voxel test") {
    const Vec3 room_center(1.0, -0.5, 1.0);
    const auto views = orbit_views(4, room_center, 3.2, 0.8);
    const VoxelGridSpec grid = center_volume(views, Vec3(6.4, 6.4, 3.2), {16, 16, 8});
    const RayClip clip;
    const InteractionIndex index = build_interaction_index(views, grid, clip);

    CHECK(index.n_views == 4);
    CHECK(index.feature_height == 6);
    CHECK(index.feature_width == 8);
    CHECK(std::is_sorted(index.pairs.begin(), index.pairs.end()));
    CHECK(std::adjacent_find(index.pairs.begin(), index.pairs.end()) ==
          index.pairs.end());

    std::set<std::array<uint32_t, 6>> got;
    for (const auto& p : index.pairs) got.insert({p.view, p.row, p.col, p.vx, p.vy, p.vz});

    std::set<std::array<uint32_t, 6>> expected;
    for (uint32_t vi = 0; vi < views.size(); ++vi) {
        for (int r = 0; r < views[vi].feature_height; ++r) {
            for (int c = 0; c < views[vi].feature_width; ++c) {
                const Ray ray = pixel_ray(views[vi], r, c, clip);
                for (int z = 0; z < grid.dims[2]; ++z)
                    for (int y = 0; y < grid.dims[1]; ++y)
                        for (int x = 0; x < grid.dims[0]; ++x) {
                            if (slab_chord(ray, grid, {x, y, z}) > 0.0) {
                                expected.insert({vi, static_cast<uint32_t>(r),
                                                 static_cast<uint32_t>(c),
                                                 static_cast<uint32_t>(x),
                                                 static_cast<uint32_t>(y),
                                                 static_cast<uint32_t>(z)});
                            }
                        }
            }
        }
    }
    CHECK(got == expected);
}

TEST_CASE("memory report follows the closed-form byte counts") {
    InteractionIndex index;
    index.n_views = 2;
    index.feature_height = 3;
    index.feature_width = 4;
    index.grid_dims = {5, 6, 7};
    index.pairs.resize(100);
    const MemoryReport r = memory_report(index, 8, 4);
    CHECK(r.entries == 100);
    // 2 directions x 24 pixels x 210 voxels x 8 heads x 4 bytes
    CHECK(r.dense_bytes == doctest::Approx(2.0 * 24 * 210 * 8 * 4));
    // 100 pairs x 3 scalars x 8 heads x 2 directions x 4 bytes
    CHECK(r.sparse_bytes == doctest::Approx(100.0 * 3 * 8 * 2 * 4));
    CHECK(r.ratio == doctest::Approx(r.dense_bytes / r.sparse_bytes));
    index.pairs.clear();
    const MemoryReport empty = memory_report(index, 8, 4);
    CHECK(std::isinf(empty.ratio));
}

TEST_CASE("index files round-trip exactly and reject corrupt headers") {
    const auto views = orbit_views(3, Vec3::Zero(), 2.5, 0.5);
    const VoxelGridSpec grid = center_volume(views, Vec3(4.0, 4.0, 2.0), {8, 8, 4});
    const InteractionIndex index = build_interaction_index(views, grid);
    REQUIRE(!index.pairs.empty());

    const auto dir = std::filesystem::temp_directory_path() / "raygrid_geom_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "index.bin";
    save_index(path, index);
    const InteractionIndex loaded = load_index(path);
    CHECK(loaded.n_views == index.n_views);
    CHECK(loaded.feature_height == index.feature_height);
    CHECK(loaded.feature_width == index.feature_width);
    CHECK(loaded.grid_dims == index.grid_dims);
    REQUIRE(loaded.pairs.size() == index.pairs.size());
    CHECK(std::equal(loaded.pairs.begin(), loaded.pairs.end(), index.pairs.begin()));

    // Flip a magic byte.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
    }
    CHECK_THROWS_AS(load_index(path), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("camera trajectory files round-trip") {
    const auto views = orbit_views(5, Vec3(0.5, 0.5, 0.0), 3.0, 1.0);
    const auto dir = std::filesystem::temp_directory_path() / "raygrid_cam_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "cameras.json";
    save_trajectory(path, views);
    const auto loaded = load_trajectory(path, 16);
    REQUIRE(loaded.size() == views.size());
    for (size_t i = 0; i < views.size(); ++i) {
        CHECK((loaded[i].pose.rotation - views[i].pose.rotation).cwiseAbs().maxCoeff() <
              1e-12);
        CHECK((loaded[i].pose.translation - views[i].pose.translation).norm() < 1e-12);
        CHECK(loaded[i].intrinsics.fx == views[i].intrinsics.fx);
        CHECK(loaded[i].feature_width == views[i].feature_width);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("invalid inputs are rejected") {
    VoxelGridSpec grid;
    grid.dims = {0, 4, 4};
    Ray ray;
    ray.direction = Vec3(1, 0, 0);
    ray.t_near = 0.1;
    ray.t_far = 1.0;
    CHECK_THROWS_AS(traverse_voxels(ray, grid), ValueError);
    grid.dims = {4, 4, 4};
    ray.direction = Vec3(2, 0, 0);  // not unit length
    CHECK_THROWS_AS(traverse_voxels(ray, grid), ValueError);
    CameraPose pose;
    pose.rotation << 1, 0, 0, 0, 1, 0, 0, 0, -1;  // determinant -1
    CHECK_THROWS_AS(pose.validate(), ValueError);
}
