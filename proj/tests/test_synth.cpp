// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "raygrid/backbone/backbone.hpp"
#include "raygrid/common/png_io.hpp"
#include "raygrid/geometry/camera.hpp"
#include "raygrid/heads/objects.hpp"
#include "raygrid/nn/parallel.hpp"
#include "raygrid/nn/rng.hpp"
#include "raygrid/synth/dataset.hpp"
#include "raygrid/synth/synth.hpp"

using namespace raygrid;
using synth::SynthConfig;

namespace {

// AABB of a posed unit box via corner enumeration, kept independent of the
// generator's closed-form half-extent formula.
struct Box {
    Vec3 lo = Vec3::Constant(1e30);
    Vec3 hi = Vec3::Constant(-1e30);
};

Box corner_aabb(const heads::ObjectPose& pose) {
    Box b;
    for (int i = 0; i < 8; ++i) {
        const Vec3 canon(i & 1 ? 0.5 : -0.5, i & 2 ? 0.5 : -0.5,
                         i & 4 ? 0.5 : -0.5);
        const Vec3 p = heads::apply_pose(pose, canon);
        b.lo = b.lo.cwiseMin(p);
        b.hi = b.hi.cwiseMax(p);
    }
    return b;
}

double overlap_volume(const Box& a, const Box& b) {
    double v = 1.0;
    for (int i = 0; i < 3; ++i) {
        v *= std::max(0.0, std::min(a.hi[i], b.hi[i]) -
                               std::max(a.lo[i], b.lo[i]));
    }
    return v;
}

bool poses_equal(const heads::ObjectPose& a, const heads::ObjectPose& b) {
    return std::memcmp(a.center.data(), b.center.data(), 3 * sizeof(double)) == 0 &&
           std::memcmp(a.scale.data(), b.scale.data(), 3 * sizeof(double)) == 0 &&
           a.yaw == b.yaw;
}

geometry::CameraView axis_view(const Vec3& pos) {
    geometry::CameraView view;
    view.intrinsics = {110.0, 110.0, 64.0, 48.0, 128, 96};
    view.pose.rotation.col(0) = Vec3(0, -1, 0);  // right
    view.pose.rotation.col(1) = Vec3(0, 0, -1);  // down
    view.pose.rotation.col(2) = Vec3(1, 0, 0);   // forward (+x)
    view.pose.translation = pos;
    view.feature_width = 8;
    view.feature_height = 6;
    view.validate();
    return view;
}

Vec3 pixel_color(const nn::Tensor<float>& images, int view, int row, int col) {
    const int64_t h = images.dim(1), w = images.dim(2);
    const float* px = images.ptr() + ((view * h + row) * w + col) * 3;
    return Vec3(px[0], px[1], px[2]);
}

// Float-level color comparison; the renderer's double arithmetic may fuse
// differently across translation units, so exact bit equality is reserved
// for run-to-run determinism checks.
bool color_close(const Vec3& got, const Vec3& expect) {
    return (got - expect).cwiseAbs().maxCoeff() <= 1e-6;
}

}  // namespace

TEST_CASE("canonical shapes: structure and tight extents") {
    REQUIRE(synth::n_categories() == 5);
    const int dim = 15;
    for (int cat = 0; cat < synth::n_categories(); ++cat) {
        CAPTURE(cat);
        const BitVolume shape = synth::canonical_shape(cat, dim);
        CHECK(shape.dims == std::array<int, 3>{dim, dim, dim});
        CHECK(shape.popcount() > 0);
        // Occupancy reaches all six faces so the pose scale is tight.
        bool lo[3] = {false, false, false}, hi[3] = {false, false, false};
        for (int z = 0; z < dim; ++z)
            for (int y = 0; y < dim; ++y)
                for (int x = 0; x < dim; ++x) {
                    if (!shape.get(x, y, z)) continue;
                    const int c[3] = {x, y, z};
                    for (int i = 0; i < 3; ++i) {
                        lo[i] |= c[i] == 0;
                        hi[i] |= c[i] == dim - 1;
                    }
                }
        for (int i = 0; i < 3; ++i) {
            CHECK(lo[i]);
            CHECK(hi[i]);
        }
        CHECK(std::string(synth::category_name(cat)).size() > 0);
        CHECK(synth::category_color(cat).minCoeff() >= 0.0);
        CHECK(synth::category_color(cat).maxCoeff() <= 1.0);
    }

    const BitVolume box = synth::canonical_shape(0, dim);
    CHECK(box.popcount() == dim * dim * dim);

    const BitVolume cylinder = synth::canonical_shape(1, dim);
    CHECK_FALSE(cylinder.get(0, 0, 7));       // corner outside the disc
    CHECK(cylinder.get(7, 7, 0));             // axis
    CHECK(cylinder.get(14, 7, 7));            // disc rim on +x

    const BitVolume lshape = synth::canonical_shape(2, dim);
    CHECK_FALSE(lshape.get(10, 10, 7));       // removed quadrant
    CHECK(lshape.get(4, 10, 7));
    CHECK(lshape.get(10, 4, 7));
    CHECK(lshape.get(4, 4, 7));

    const BitVolume table = synth::canonical_shape(3, dim);
    CHECK(table.get(7, 7, 14));               // top slab
    CHECK_FALSE(table.get(7, 7, 0));          // open below the middle
    CHECK(table.get(0, 0, 0));                // leg
    CHECK_FALSE(table.get(7, 0, 0));          // between legs

    const BitVolume tee = synth::canonical_shape(4, dim);
    CHECK(tee.get(13, 1, 7));                 // crossbar end
    CHECK(tee.get(2, 7, 7));                  // stem
    CHECK_FALSE(tee.get(2, 1, 7));            // notch beside the stem
    CHECK(synth::canonical_shape(4, 33).popcount() > 0);
    CHECK_THROWS_AS(synth::canonical_shape(9, dim), ValueError);
}

TEST_CASE("generate_scene: determinism and empty scenes") {
    const SynthConfig config = SynthConfig::toy();
    const synth::GeneratedScene a = synth::generate_scene(42, config);
    const synth::GeneratedScene b = synth::generate_scene(42, config);
    REQUIRE(a.objects.size() == b.objects.size());
    for (size_t i = 0; i < a.objects.size(); ++i) {
        CHECK(a.objects[i].category == b.objects[i].category);
        CHECK(poses_equal(a.objects[i].pose, b.objects[i].pose));
        CHECK(a.objects[i].shape.words == b.objects[i].shape.words);
    }
    CHECK(a.room_extent == config.room_extent);

    const synth::GeneratedScene c = synth::generate_scene(43, config);
    const bool different =
        c.objects.size() != a.objects.size() ||
        !poses_equal(c.objects[0].pose, a.objects[0].pose);
    CHECK(different);

    SynthConfig empty = config;
    empty.n_objects_min = empty.n_objects_max = 0;
    CHECK(synth::generate_scene(7, empty).objects.empty());
}

TEST_CASE("generate_scene: non-overlapping placements inside the room") {
    const SynthConfig config = SynthConfig::toy();
    int total = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        CAPTURE(seed);
        const synth::GeneratedScene scene = synth::generate_scene(seed, config);
        std::vector<Box> boxes;
        for (const heads::ObjectGT& object : scene.objects) {
            REQUIRE(object.category >= 0);
            REQUIRE(object.category < synth::n_categories());
            CHECK(object.pose.scale.minCoeff() > 0.0);
            // Rests on the floor.
            CHECK(object.pose.center.z() ==
                  doctest::Approx(0.5 * object.pose.scale.z()));
            const Box b = corner_aabb(object.pose);
            CHECK(b.lo.x() >= -0.5 * config.room_extent.x() - 1e-9);
            CHECK(b.hi.x() <= 0.5 * config.room_extent.x() + 1e-9);
            CHECK(b.lo.y() >= -0.5 * config.room_extent.y() - 1e-9);
            CHECK(b.hi.y() <= 0.5 * config.room_extent.y() + 1e-9);
            CHECK(b.lo.z() >= -1e-9);
            CHECK(b.hi.z() <= config.room_extent.z() + 1e-9);
            boxes.push_back(b);
        }
        for (size_t i = 0; i < boxes.size(); ++i)
            for (size_t j = i + 1; j < boxes.size(); ++j)
                CHECK(overlap_volume(boxes[i], boxes[j]) == 0.0);
        total += static_cast<int>(scene.objects.size());
    }
    CHECK(total > 100);  // the toy range actually exercises multi-object scenes
}

TEST_CASE("generate_scene: impossible placement fails after bounded tries") {
    SynthConfig config = SynthConfig::toy();
    config.room_extent = Vec3(6.0, 6.0, 0.4);  // lower than any object
    config.n_objects_min = config.n_objects_max = 1;
    CHECK_THROWS_AS(synth::generate_scene(0, config), ValueError);
}

TEST_CASE("generate_scene: cylinders stay upright, yaw stays in category domains") {
    SynthConfig config = SynthConfig::toy();
    config.n_objects_min = config.n_objects_max = 2;
    int cylinders = 0;
    for (uint64_t seed = 200; seed < 260; ++seed) {
        for (const heads::ObjectGT& object :
             synth::generate_scene(seed, config).objects) {
            if (object.category == 1) {
                ++cylinders;
                CHECK(object.pose.yaw == 0.0);
                CHECK(object.pose.scale.x() == object.pose.scale.y());
            }
            if (object.category == 0 || object.category == 3) {
                CHECK(std::abs(object.pose.yaw) <= 75.0 / 180.0 * kPi);
                // Aspect floor keeps the quarter-turn pose unambiguous.
                CHECK(object.pose.scale.y() >= 1.25 * object.pose.scale.x() - 1e-9);
            }
            CHECK(std::abs(object.pose.yaw) <= kPi);
        }
    }
    CHECK(cylinders > 5);
}

TEST_CASE("generate_trajectory: smoothness, room bounds, determinism") {
    const SynthConfig config = SynthConfig::toy();
    const Vec3 room = config.room_extent;
    const auto views = synth::generate_trajectory(room, 24, 9, config);
    REQUIRE(views.size() == 24);
    for (size_t i = 0; i < views.size(); ++i) {
        const Vec3 p = views[i].pose.translation;
        CHECK(std::abs(p.x()) <= 0.5 * room.x());
        CHECK(std::abs(p.y()) <= 0.5 * room.y());
        CHECK(p.z() > 0.0);
        CHECK(p.z() < room.z());
        views[i].pose.validate();
        if (i > 0) {
            CHECK((p - views[i - 1].pose.translation).norm() <= 0.3);
        }
    }
    const auto again = synth::generate_trajectory(room, 24, 9, config);
    for (size_t i = 0; i < views.size(); ++i) {
        CHECK(views[i].pose.translation == again[i].pose.translation);
        CHECK(views[i].pose.rotation == again[i].pose.rotation);
    }

    CHECK(synth::generate_trajectory(room, 1, 5, config).size() == 1);
}

TEST_CASE("generate_trajectory: every object center lands in some frustum") {
    const SynthConfig config = SynthConfig::toy();
    for (uint64_t seed = 0; seed < 100; ++seed) {
        CAPTURE(seed);
        const synth::GeneratedScene scene = synth::generate_scene(seed, config);
        const auto views = synth::generate_trajectory(
            scene.room_extent, config.n_frames, nn::mix_seed(seed, "traj"),
            config);
        for (size_t k = 0; k < scene.objects.size(); ++k) {
            CAPTURE(k);
            bool seen = false;
            for (const geometry::CameraView& view : views) {
                int row = 0, col = 0;
                if (geometry::project_to_feature_cell(
                        view, scene.objects[k].pose.center, row, col)) {
                    seen = true;
                    break;
                }
            }
            CHECK(seen);
        }
    }
}

TEST_CASE("render_views: empty scene is the pure background gradient") {
    const std::vector<heads::ObjectGT> objects;
    const std::vector<geometry::CameraView> views = {axis_view(Vec3(-2, 0, 0.5)),
                                                     axis_view(Vec3(0, 1, 2))};
    const synth::RenderResult r = synth::render_views(objects, views);
    REQUIRE(r.images.shape == std::vector<int64_t>({2, 96, 128, 3}));
    for (int v = 0; v < 2; ++v) {
        CHECK(r.visible[static_cast<size_t>(v)].popcount() == 0);
        for (int row = 0; row < 96; ++row) {
            const Vec3 expect = synth::background_color(row, 96);
            for (int col : {0, 57, 127}) {
                const Vec3 got = pixel_color(r.images, v, row, col);
                REQUIRE(color_close(got, expect));
            }
        }
    }
}

TEST_CASE("render_views: front face of an axis-aligned box, analytically") {
    heads::ObjectGT box;
    box.category = 0;
    box.pose.center = Vec3(2.0, 0.0, 0.5);
    box.pose.scale = Vec3(0.8, 0.8, 0.8);
    box.shape = synth::canonical_shape(0, 15);
    const std::vector<heads::ObjectGT> objects = {box};
    const std::vector<geometry::CameraView> views = {axis_view(Vec3(-2, 0, 0.5))};
    const synth::RenderResult r = synth::render_views(objects, views);

    // Face plane x = 1.6, camera depth 3.6; the -x normal faces away from the
    // overhead light so the shade is exactly the ambient term.
    const double tint0 = 0.72;
    const Vec3 expect = synth::category_color(0) * tint0 * 0.35;
    // Projected extents: u in [51.8, 76.2], v in [35.8, 60.2].
    for (const auto& [row, col] : std::vector<std::pair<int, int>>{
             {48, 64}, {38, 54}, {59, 75}}) {
        CAPTURE(row);
        CAPTURE(col);
        CHECK(color_close(pixel_color(r.images, 0, row, col), expect));
        CHECK(r.visible[0].get(row, col));
    }
    for (const auto& [row, col] : std::vector<std::pair<int, int>>{
             {20, 64}, {70, 64}, {48, 40}, {48, 88}}) {
        CAPTURE(row);
        CAPTURE(col);
        CHECK(color_close(pixel_color(r.images, 0, row, col),
                          synth::background_color(row, 96)));
        CHECK_FALSE(r.visible[0].get(row, col));
    }
}

TEST_CASE("render_views: nearer object wins the depth test") {
    heads::ObjectGT near_box, far_box;
    near_box.category = 0;
    near_box.pose.center = Vec3(2.0, 0.0, 0.5);
    near_box.pose.scale = Vec3(0.6, 0.6, 0.6);
    near_box.shape = synth::canonical_shape(0, 15);
    far_box.category = 2;
    far_box.pose.center = Vec3(5.0, 0.0, 0.75);
    far_box.pose.scale = Vec3(1.5, 1.5, 1.5);
    far_box.shape = synth::canonical_shape(0, 15);
    const std::vector<geometry::CameraView> views = {axis_view(Vec3(-2, 0, 0.5))};

    for (const std::vector<heads::ObjectGT>& objects :
         {std::vector<heads::ObjectGT>{near_box, far_box},
          std::vector<heads::ObjectGT>{far_box, near_box}}) {
        const synth::RenderResult r = synth::render_views(objects, views);
        const Vec3 center = pixel_color(r.images, 0, 48, 64);
        // The near box is red-dominant, the far lshape-colored box green-dominant.
        CHECK(center.x() > center.y());
        // Off to the side, only the far box is visible.
        const Vec3 side = pixel_color(r.images, 0, 48, 75);
        CHECK(side.y() > side.x());
        CHECK(r.visible[0].get(48, 64));
        CHECK(r.visible[0].get(48, 75));
    }
}

TEST_CASE("render_views: deterministic across runs and thread counts") {
    const SynthConfig config = SynthConfig::toy();
    const synth::GeneratedScene scene = synth::generate_scene(11, config);
    const auto views =
        synth::generate_trajectory(scene.room_extent, 6, 12, config);
    const synth::RenderResult a = synth::render_views(scene.objects, views);
    const synth::RenderResult b = synth::render_views(scene.objects, views);
    REQUIRE(a.images.data.size() == b.images.data.size());
    CHECK(std::memcmp(a.images.ptr(), b.images.ptr(),
                      a.images.data.size() * sizeof(float)) == 0);
    nn::set_num_threads(4);
    const synth::RenderResult c = synth::render_views(scene.objects, views);
    nn::set_num_threads(1);
    CHECK(std::memcmp(a.images.ptr(), c.images.ptr(),
                      a.images.data.size() * sizeof(float)) == 0);
    for (size_t v = 0; v < views.size(); ++v) {
        CHECK(a.visible[v].words == b.visible[v].words);
        CHECK(a.visible[v].words == c.visible[v].words);
    }
}

TEST_CASE("make_scene: targets are consistent and deterministic") {
    const SynthConfig config = SynthConfig::toy();
    const backbone::BackboneConfig model = backbone::BackboneConfig::toy();
    const synth::SceneSample a = synth::make_scene(3, config, model);
    const synth::SceneSample b = synth::make_scene(3, config, model);
    CHECK(a.objects.size() == b.objects.size());
    CHECK(std::memcmp(a.images.ptr(), b.images.ptr(),
                      a.images.data.size() * sizeof(float)) == 0);
    CHECK(a.occupancy.words == b.occupancy.words);
    REQUIRE(a.views.size() == static_cast<size_t>(config.n_frames));
    REQUIRE(a.amodal_masks.size() == a.views.size());
    REQUIRE(a.visible_masks.size() == a.views.size());
    CHECK(a.grid.dims == model.grid_dims);
    CHECK(a.occupancy.popcount() > 0);

    SynthConfig empty = config;
    empty.n_objects_min = empty.n_objects_max = 0;
    const synth::SceneSample e = synth::make_scene(3, empty, model);
    CHECK(e.objects.empty());
    CHECK(e.occupancy.popcount() == 0);
}

TEST_CASE("make_scene: amodal masks contain visible masks, occupancy nonzero") {
    const SynthConfig config = SynthConfig::toy();
    const backbone::BackboneConfig model = backbone::BackboneConfig::toy();
    for (uint64_t seed = 30; seed < 50; ++seed) {
        CAPTURE(seed);
        const synth::SceneSample sample = synth::make_scene(seed, config, model);
        REQUIRE_FALSE(sample.objects.empty());
        CHECK(sample.occupancy.popcount() > 0);
        int64_t visible_total = 0;
        for (size_t v = 0; v < sample.views.size(); ++v) {
            const BitImage& amodal = sample.amodal_masks[v];
            const BitImage& visible = sample.visible_masks[v];
            REQUIRE(amodal.words.size() == visible.words.size());
            for (size_t w = 0; w < amodal.words.size(); ++w) {
                CHECK((visible.words[w] & ~amodal.words[w]) == 0);
            }
            visible_total += visible.popcount();
        }
        CHECK(visible_total > 0);
    }
}

TEST_CASE("png io: round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "raygrid_png_test";
    std::filesystem::create_directories(dir);
    nn::Rng rng(4);
    std::vector<uint8_t> rgb(31 * 17 * 3);
    for (uint8_t& v : rgb) v = static_cast<uint8_t>(rng.uniform_index(256));
    common::save_png(dir / "x.png", 31, 17, rgb);
    int h = 0, w = 0;
    const std::vector<uint8_t> back = common::load_png(dir / "x.png", h, w);
    CHECK(h == 31);
    CHECK(w == 17);
    CHECK(back == rgb);
    CHECK_THROWS_AS(common::load_png(dir / "missing.png", h, w), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset: scene round trip and byte determinism") {
    const auto root = std::filesystem::temp_directory_path() / "raygrid_ds_test";
    std::filesystem::remove_all(root);
    SynthConfig config = SynthConfig::toy();
    config.n_frames = 4;  // keep the test quick
    const backbone::BackboneConfig model = backbone::BackboneConfig::toy();

    const synth::SceneSample sample = synth::make_scene(77, config, model);
    synth::write_scene(root / "scene_0000", sample);
    const synth::SceneSample back = synth::read_scene(root / "scene_0000");

    REQUIRE(back.views.size() == sample.views.size());
    for (size_t v = 0; v < sample.views.size(); ++v) {
        CHECK(back.views[v].pose.translation == sample.views[v].pose.translation);
        CHECK(back.views[v].pose.rotation == sample.views[v].pose.rotation);
        CHECK(back.views[v].intrinsics.fx == sample.views[v].intrinsics.fx);
        CHECK(back.views[v].feature_width == sample.views[v].feature_width);
        CHECK(back.amodal_masks[v].words == sample.amodal_masks[v].words);
        CHECK(back.visible_masks[v].words == sample.visible_masks[v].words);
    }
    REQUIRE(back.objects.size() == sample.objects.size());
    for (size_t i = 0; i < sample.objects.size(); ++i) {
        CHECK(back.objects[i].category == sample.objects[i].category);
        CHECK(poses_equal(back.objects[i].pose, sample.objects[i].pose));
        CHECK(back.objects[i].shape.words == sample.objects[i].shape.words);
    }
    CHECK(back.occupancy.words == sample.occupancy.words);
    CHECK(back.grid.dims == sample.grid.dims);
    CHECK(back.grid.origin == sample.grid.origin);
    CHECK(back.seed == sample.seed);
    double max_err = 0.0;
    for (size_t i = 0; i < sample.images.data.size(); ++i) {
        max_err = std::max(max_err, std::abs(static_cast<double>(
                                        sample.images.data[i] -
                                        back.images.data[i])));
    }
    CHECK(max_err <= 0.5 / 255.0 + 1e-6);  // 8-bit quantization only

    // A second write of the same sample produces identical bytes.
    synth::write_scene(root / "again", sample);
    for (const char* name : {"gt.json", "targets.bin", "cameras.json"}) {
        std::ifstream f1(root / "scene_0000" / name, std::ios::binary);
        std::ifstream f2(root / "again" / name, std::ios::binary);
        const std::string b1((std::istreambuf_iterator<char>(f1)),
                             std::istreambuf_iterator<char>());
        const std::string b2((std::istreambuf_iterator<char>(f2)),
                             std::istreambuf_iterator<char>());
        CHECK(b1 == b2);
        CHECK(b1.size() > 0);
    }
    std::filesystem::remove_all(root);
}

TEST_CASE("dataset: write_dataset manifest and layout") {
    const auto root = std::filesystem::temp_directory_path() / "raygrid_ds_full";
    std::filesystem::remove_all(root);
    SynthConfig config = SynthConfig::toy();
    config.n_frames = 3;
    config.n_objects_max = 2;
    const backbone::BackboneConfig model = backbone::BackboneConfig::toy();

    const synth::DatasetManifest written =
        synth::write_dataset(root, 3, 123, config, model);
    CHECK(written.scene_seeds.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(written.scene_seeds[static_cast<size_t>(i)] ==
              synth::scene_seed(123, i));
        const auto dir = synth::scene_dir(root, i);
        CHECK(std::filesystem::exists(dir / "cameras.json"));
        CHECK(std::filesystem::exists(dir / "gt.json"));
        CHECK(std::filesystem::exists(dir / "targets.bin"));
        CHECK(std::filesystem::exists(dir / "images" / "view_000.png"));
    }

    const synth::DatasetManifest manifest = synth::read_manifest(root);
    CHECK(manifest.base_seed == 123);
    CHECK(manifest.n_scenes == 3);
    CHECK(manifest.scene_seeds == written.scene_seeds);
    CHECK(manifest.config_hash == synth::dataset_config_hash(config, model));
    CHECK(manifest.synth.n_frames == 3);
    CHECK(manifest.grid_dims == model.grid_dims);

    // Reload one scene and spot-check it against regeneration.
    const synth::SceneSample regen =
        synth::make_scene(manifest.scene_seeds[1], config, model);
    const synth::SceneSample loaded = synth::read_scene(synth::scene_dir(root, 1));
    CHECK(loaded.objects.size() == regen.objects.size());
    CHECK(loaded.occupancy.words == regen.occupancy.words);
    std::filesystem::remove_all(root);
}

TEST_CASE("dataset: config hash tracks generation-relevant fields") {
    const SynthConfig config = SynthConfig::toy();
    const backbone::BackboneConfig model = backbone::BackboneConfig::toy();
    const uint64_t base = synth::dataset_config_hash(config, model);
    CHECK(base == synth::dataset_config_hash(config, model));

    SynthConfig other = config;
    other.n_frames += 1;
    CHECK(synth::dataset_config_hash(other, model) != base);
    backbone::BackboneConfig wider = model;
    wider.volume_extent.x() += 0.1;
    CHECK(synth::dataset_config_hash(config, wider) != base);
    // Fields that don't change generated bytes (model width) are excluded.
    backbone::BackboneConfig deeper = model;
    deeper.n_blocks += 1;
    CHECK(synth::dataset_config_hash(config, deeper) == base);

    const nlohmann::json j = synth::to_json(config);
    const SynthConfig back = synth::synth_from_json(j);
    CHECK(back.n_frames == config.n_frames);
    CHECK(back.room_extent == config.room_extent);
    CHECK(back.categories == config.categories);
    CHECK(synth::dataset_config_hash(back, model) == base);
}
