// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <string>

#include "raygrid/heads/aux_heads.hpp"
#include "raygrid/nn/rng.hpp"
#include "raygrid/synth/synth.hpp"

namespace raygrid::synth {

namespace {

// Scale ranges in meters (full extents) and yaw sampling domains. Rotationally
// symmetric primitives get restricted domains so the yaw target stays
// well-defined: cylinders are upright with yaw fixed at zero, and the
// pi-symmetric box/table keep yaw inside +-75 degrees with an aspect floor
// that rules out the near-square quarter-turn ambiguity. L and T profiles have
// no rotational symmetry, so they use the full circle.
struct PlacementRule {
    double x_lo, x_hi;
    double y_lo, y_hi;
    double z_lo, z_hi;
    double aspect_lo, aspect_hi;  // when > 0: sy = min(sx * aspect, y_hi)
    bool round_xy;                // sy = sx
    double max_yaw;
};

constexpr double kYaw75 = 75.0 / 180.0 * kPi;

const PlacementRule kRules[] = {
    /*box*/ {0.60, 0.95, 0.0, 1.20, 0.50, 1.20, 1.25, 1.75, false, kYaw75},
    /*cylinder*/ {0.70, 1.00, 0.0, 0.0, 0.60, 1.40, 0.0, 0.0, true, 0.0},
    /*lshape*/ {0.90, 1.40, 0.90, 1.40, 0.60, 1.30, 0.0, 0.0, false, kPi},
    /*table*/ {0.90, 1.25, 0.0, 1.60, 0.60, 1.10, 1.25, 1.70, false, kYaw75},
    /*tee*/ {0.90, 1.40, 0.90, 1.40, 0.60, 1.20, 0.0, 0.0, false, kPi},
};

heads::ObjectPose sample_pose(int category, nn::Rng& rng,
                              const SynthConfig& config) {
    const PlacementRule& r = kRules[category];
    const double sx = rng.uniform(r.x_lo, r.x_hi);
    double sy = sx;
    if (r.aspect_lo > 0.0) {
        sy = std::min(sx * rng.uniform(r.aspect_lo, r.aspect_hi), r.y_hi);
    } else if (!r.round_xy) {
        sy = rng.uniform(r.y_lo, r.y_hi);
    }
    const double sz = rng.uniform(r.z_lo, r.z_hi);
    heads::ObjectPose pose;
    pose.scale = Vec3(sx, sy, sz);
    pose.yaw = r.max_yaw == 0.0
                   ? 0.0
                   : wrap_angle(rng.uniform(-r.max_yaw, r.max_yaw));
    const double pr = config.placement_radius;
    pose.center =
        Vec3(rng.uniform(-pr, pr), rng.uniform(-pr, pr), 0.5 * sz);
    return pose;
}

struct Aabb {
    Vec3 lo, hi;
};

Aabb posed_aabb(const heads::ObjectPose& pose) {
    const double c = std::abs(std::cos(pose.yaw));
    const double s = std::abs(std::sin(pose.yaw));
    const Vec3 half(0.5 * (c * pose.scale.x() + s * pose.scale.y()),
                    0.5 * (s * pose.scale.x() + c * pose.scale.y()),
                    0.5 * pose.scale.z());
    return {pose.center - half, pose.center + half};
}

bool inside_room(const Aabb& a, const Vec3& room) {
    return a.lo.x() >= -0.5 * room.x() && a.hi.x() <= 0.5 * room.x() &&
           a.lo.y() >= -0.5 * room.y() && a.hi.y() <= 0.5 * room.y() &&
           a.lo.z() >= 0.0 && a.hi.z() <= room.z();
}

bool overlaps(const Aabb& a, const Aabb& b, double gap) {
    for (int i = 0; i < 3; ++i) {
        if (a.hi[i] + gap <= b.lo[i] || b.hi[i] + gap <= a.lo[i]) return false;
    }
    return true;
}

}  // namespace

SynthConfig SynthConfig::paper() {
    SynthConfig c;
    c.n_objects_min = 2;
    c.n_objects_max = 8;
    c.room_extent = Vec3(9.0, 9.0, 3.5);
    c.shape_dim = 63;
    c.n_frames = 96;
    c.image_height = 480;
    c.image_width = 640;
    c.focal = 500.0;
    c.placement_radius = 3.0;
    return c;
}

void SynthConfig::validate() const {
    detail::check(n_objects_min >= 0 && n_objects_max >= n_objects_min,
                  "invalid object count range");
    detail::check(n_objects_max == 0 || !categories.empty(),
                  "category set is empty");
    for (int cat : categories) {
        detail::check(cat >= 0 && cat < n_categories(), "category out of range");
    }
    detail::check(room_extent.minCoeff() > 0.0, "room extent must be positive");
    detail::check(shape_dim >= 5, "shape_dim too small");
    detail::check(n_frames >= 1, "need at least one frame");
    detail::check(image_height > 0 && image_height % 16 == 0 &&
                      image_width > 0 && image_width % 16 == 0,
                  "image size must be a positive multiple of 16");
    detail::check(focal > 0.0, "focal must be positive");
    detail::check(placement_radius > 0.0, "placement radius must be positive");
    detail::check(max_placement_tries >= 1, "max_placement_tries must be >= 1");
}

GeneratedScene generate_scene(uint64_t seed, const SynthConfig& config) {
    config.validate();
    nn::Rng rng(seed);
    GeneratedScene scene;
    scene.room_extent = config.room_extent;
    const int n =
        config.n_objects_min == config.n_objects_max
            ? config.n_objects_min
            : rng.uniform_int(config.n_objects_min, config.n_objects_max);
    std::vector<Aabb> placed;
    constexpr double kGap = 0.05;
    for (int k = 0; k < n; ++k) {
        for (int tries = 1;; ++tries) {
            if (tries > config.max_placement_tries) {
                throw ValueError(
                    "generate_scene: object placement failed after " +
                    std::to_string(config.max_placement_tries) + " rejections");
            }
            const int cat = config.categories[static_cast<size_t>(
                rng.uniform_index(config.categories.size()))];
            const heads::ObjectPose pose = sample_pose(cat, rng, config);
            const Aabb aabb = posed_aabb(pose);
            if (!inside_room(aabb, config.room_extent)) continue;
            bool blocked = false;
            for (const Aabb& other : placed) {
                if (overlaps(aabb, other, kGap)) {
                    blocked = true;
                    break;
                }
            }
            if (blocked) continue;
            placed.push_back(aabb);
            scene.objects.push_back(
                {cat, pose, canonical_shape(cat, config.shape_dim)});
            break;
        }
    }
    return scene;
}

std::vector<geometry::CameraView> generate_trajectory(
    const Vec3& room_extent, int n_frames, uint64_t seed,
    const SynthConfig& config) {
    detail::check(n_frames >= 1, "need at least one frame");
    detail::check(room_extent.minCoeff() > 0.0, "room extent must be positive");
    nn::Rng rng(seed);
    // Full-circle orbit; the radius shrinks for short trajectories so that
    // the chord between consecutive frames stays within the 0.3 m bound.
    const double room_radius =
        0.18 * std::min(room_extent.x(), room_extent.y());
    const double radius =
        n_frames > 1
            ? std::min(room_radius, 0.28 / (2.0 * std::sin(kPi / n_frames)))
            : room_radius;
    const double theta0 = rng.uniform(0.0, 2.0 * kPi);
    const double height_phase = rng.uniform(0.0, 2.0 * kPi);
    const double look_phase_x = rng.uniform(0.0, 2.0 * kPi);
    const double look_phase_y = rng.uniform(0.0, 2.0 * kPi);
    const double look_phase_z = rng.uniform(0.0, 2.0 * kPi);

    std::vector<geometry::CameraView> views;
    views.reserve(static_cast<size_t>(n_frames));
    for (int i = 0; i < n_frames; ++i) {
        const double theta = theta0 + 2.0 * kPi * i / n_frames;
        const Vec3 pos(radius * std::cos(theta), radius * std::sin(theta),
                       1.60 + 0.08 * std::sin(2.0 * theta + height_phase));
        // The target sits just below camera height so the view axis stays
        // shallow; with the wide vertical field this keeps both low centers
        // under the camera and tall centers near the far wall in frame.
        const Vec3 target(0.08 * std::sin(3.0 * theta + look_phase_x),
                          0.08 * std::cos(2.0 * theta + look_phase_y),
                          1.05 + 0.10 * std::sin(theta + look_phase_z));
        const Vec3 fwd = (target - pos).normalized();
        Vec3 right = fwd.cross(Vec3::UnitZ());
        if (right.norm() < 1e-9) right = Vec3::UnitX();
        right.normalize();
        const Vec3 down = fwd.cross(right);

        geometry::CameraView view;
        view.intrinsics = {config.focal,
                           config.focal,
                           0.5 * config.image_width,
                           0.5 * config.image_height,
                           config.image_width,
                           config.image_height};
        view.pose.rotation.col(0) = right;
        view.pose.rotation.col(1) = down;
        view.pose.rotation.col(2) = fwd;
        view.pose.translation = pos;
        view.feature_width = config.image_width / 16;
        view.feature_height = config.image_height / 16;
        view.validate();
        detail::check(std::abs(pos.x()) <= 0.5 * room_extent.x() &&
                          std::abs(pos.y()) <= 0.5 * room_extent.y() &&
                          pos.z() > 0.0 && pos.z() < room_extent.z(),
                      "camera left the room");
        views.push_back(view);
    }
    return views;
}

namespace {

bool covers_any_voxel(const heads::ObjectGT& object,
                      const geometry::VoxelGridSpec& grid) {
    const int dim = object.shape.dims[0];
    for (int z = 0; z < grid.dims[2]; ++z) {
        for (int y = 0; y < grid.dims[1]; ++y) {
            for (int x = 0; x < grid.dims[0]; ++x) {
                const Vec3 p =
                    heads::to_canonical(object.pose, grid.voxel_center(x, y, z));
                if (p.cwiseAbs().maxCoeff() >= 0.5) continue;
                const int cx = std::min(
                    dim - 1, static_cast<int>((p.x() + 0.5) * dim));
                const int cy = std::min(
                    dim - 1, static_cast<int>((p.y() + 0.5) * dim));
                const int cz = std::min(
                    dim - 1, static_cast<int>((p.z() + 0.5) * dim));
                if (object.shape.get(cx, cy, cz)) return true;
            }
        }
    }
    return false;
}

}  // namespace

SceneSample make_scene(uint64_t seed, const SynthConfig& synth,
                       const backbone::BackboneConfig& model) {
    synth.validate();
    model.validate();
    detail::check(synth.image_height == model.image_height &&
                      synth.image_width == model.image_width,
                  "synth image size must match the model image size");

    const std::vector<geometry::CameraView> views = generate_trajectory(
        synth.room_extent, synth.n_frames, nn::mix_seed(seed, "trajectory"),
        synth);
    const geometry::VoxelGridSpec grid = model.grid_for(views);

    constexpr int kMaxRedraws = 32;
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        GeneratedScene g = generate_scene(
            nn::mix_seed(seed, "objects." + std::to_string(attempt)), synth);
        bool supported = true;
        for (const heads::ObjectGT& object : g.objects) {
            if (!covers_any_voxel(object, grid)) {
                supported = false;
                break;
            }
        }
        if (!supported) continue;

        SceneSample sample;
        sample.objects = std::move(g.objects);
        sample.room_extent = g.room_extent;
        sample.views = views;
        RenderResult render = render_views(sample.objects, sample.views);
        sample.images = std::move(render.images);
        sample.visible_masks = std::move(render.visible);
        sample.grid = grid;
        sample.occupancy = heads::rasterize_occupancy(sample.objects, grid);
        sample.amodal_masks =
            heads::rasterize_amodal_masks(sample.objects, sample.views);
        sample.seed = seed;
        return sample;
    }
    throw ValueError("make_scene: no object-supporting draw in " +
                     std::to_string(kMaxRedraws) + " attempts");
}

}  // namespace raygrid::synth
