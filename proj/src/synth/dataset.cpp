// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/synth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "raygrid/common/png_io.hpp"
#include "raygrid/nn/parallel.hpp"
#include "raygrid/nn/rng.hpp"

namespace raygrid::synth {

namespace {

constexpr char kTargetsMagic[4] = {'R', 'G', 'T', 'B'};
constexpr uint32_t kTargetsVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    detail::check(static_cast<bool>(in), "targets.bin: truncated");
    return value;
}

void write_words(std::ostream& out, const std::vector<uint64_t>& words) {
    write_pod<uint64_t>(out, words.size());
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(uint64_t)));
}

std::vector<uint64_t> read_words(std::istream& in) {
    const uint64_t n = read_pod<uint64_t>(in);
    std::vector<uint64_t> words(n);
    in.read(reinterpret_cast<char*>(words.data()),
            static_cast<std::streamsize>(n * sizeof(uint64_t)));
    detail::check(static_cast<bool>(in), "targets.bin: truncated");
    return words;
}

void write_targets(const std::filesystem::path& path,
                   const SceneSample& sample) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kTargetsMagic, 4);
    write_pod(out, kTargetsVersion);
    for (int i = 0; i < 3; ++i) write_pod(out, sample.grid.origin[i]);
    for (int i = 0; i < 3; ++i) write_pod(out, sample.grid.voxel_size[i]);
    write_pod(out, sample.grid.dims[0]);
    write_pod(out, sample.grid.dims[1]);
    write_pod(out, sample.grid.dims[2]);
    write_words(out, sample.occupancy.words);
    const int32_t n_views = static_cast<int32_t>(sample.views.size());
    write_pod(out, n_views);
    detail::check(sample.amodal_masks.size() == sample.views.size() &&
                      sample.visible_masks.size() == sample.views.size(),
                  "write_targets: mask count mismatch");
    for (const std::vector<BitImage>* masks :
         {&sample.amodal_masks, &sample.visible_masks}) {
        for (const BitImage& mask : *masks) {
            write_pod<int32_t>(out, mask.height);
            write_pod<int32_t>(out, mask.width);
            write_words(out, mask.words);
        }
    }
    write_pod<int32_t>(out, static_cast<int32_t>(sample.objects.size()));
    for (const heads::ObjectGT& object : sample.objects) {
        write_pod<int32_t>(out, object.shape.dims[0]);
        write_words(out, object.shape.words);
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void read_targets(const std::filesystem::path& path, SceneSample& sample) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    char magic[4];
    in.read(magic, 4);
    detail::check(static_cast<bool>(in) &&
                      std::equal(magic, magic + 4, kTargetsMagic),
                  "targets.bin: bad magic");
    detail::check(read_pod<uint32_t>(in) == kTargetsVersion,
                  "targets.bin: unsupported version");
    for (int i = 0; i < 3; ++i) sample.grid.origin[i] = read_pod<double>(in);
    for (int i = 0; i < 3; ++i) sample.grid.voxel_size[i] = read_pod<double>(in);
    sample.grid.dims[0] = read_pod<int32_t>(in);
    sample.grid.dims[1] = read_pod<int32_t>(in);
    sample.grid.dims[2] = read_pod<int32_t>(in);
    sample.grid.validate();
    sample.occupancy = BitVolume(sample.grid.dims);
    sample.occupancy.words = read_words(in);
    detail::check(sample.occupancy.words.size() ==
                      (static_cast<size_t>(sample.occupancy.count()) + 63) / 64,
                  "targets.bin: occupancy size mismatch");
    const int32_t n_views = read_pod<int32_t>(in);
    detail::check(n_views == static_cast<int32_t>(sample.views.size()),
                  "targets.bin: view count does not match cameras.json");
    for (std::vector<BitImage>* masks :
         {&sample.amodal_masks, &sample.visible_masks}) {
        masks->clear();
        for (int32_t v = 0; v < n_views; ++v) {
            const int32_t h = read_pod<int32_t>(in);
            const int32_t w = read_pod<int32_t>(in);
            BitImage mask(h, w);
            mask.words = read_words(in);
            detail::check(mask.words.size() ==
                              (static_cast<size_t>(h) * w + 63) / 64,
                          "targets.bin: mask size mismatch");
            masks->push_back(std::move(mask));
        }
    }
    const int32_t n_objects = read_pod<int32_t>(in);
    detail::check(n_objects == static_cast<int32_t>(sample.objects.size()),
                  "targets.bin: object count does not match gt.json");
    for (int32_t i = 0; i < n_objects; ++i) {
        const int32_t dim = read_pod<int32_t>(in);
        BitVolume shape({dim, dim, dim});
        shape.words = read_words(in);
        detail::check(shape.words.size() ==
                          (static_cast<size_t>(shape.count()) + 63) / 64,
                      "targets.bin: shape size mismatch");
        sample.objects[static_cast<size_t>(i)].shape = std::move(shape);
    }
}

std::string image_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d.png", index);
    return buf;
}

nlohmann::json vec3_to_json(const Vec3& v) {
    return nlohmann::json::array({v.x(), v.y(), v.z()});
}

Vec3 vec3_from_json(const nlohmann::json& j) {
    detail::check(j.is_array() && j.size() == 3, "expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

nlohmann::json to_json(const SynthConfig& config) {
    nlohmann::json j;
    j["n_objects"] = {config.n_objects_min, config.n_objects_max};
    j["categories"] = config.categories;
    j["room_extent"] = vec3_to_json(config.room_extent);
    j["shape_dim"] = config.shape_dim;
    j["n_frames"] = config.n_frames;
    j["image"] = {config.image_height, config.image_width};
    j["focal"] = config.focal;
    j["placement_radius"] = config.placement_radius;
    j["max_placement_tries"] = config.max_placement_tries;
    return j;
}

SynthConfig synth_from_json(const nlohmann::json& j, SynthConfig c) {
    if (j.contains("n_objects")) {
        c.n_objects_min = j["n_objects"][0].get<int>();
        c.n_objects_max = j["n_objects"][1].get<int>();
    }
    if (j.contains("categories"))
        c.categories = j["categories"].get<std::vector<int>>();
    if (j.contains("room_extent")) c.room_extent = vec3_from_json(j["room_extent"]);
    if (j.contains("shape_dim")) c.shape_dim = j["shape_dim"].get<int>();
    if (j.contains("n_frames")) c.n_frames = j["n_frames"].get<int>();
    if (j.contains("image")) {
        c.image_height = j["image"][0].get<int>();
        c.image_width = j["image"][1].get<int>();
    }
    if (j.contains("focal")) c.focal = j["focal"].get<double>();
    if (j.contains("placement_radius"))
        c.placement_radius = j["placement_radius"].get<double>();
    if (j.contains("max_placement_tries"))
        c.max_placement_tries = j["max_placement_tries"].get<int>();
    c.validate();
    return c;
}

uint64_t dataset_config_hash(const SynthConfig& synth,
                             const backbone::BackboneConfig& model) {
    nlohmann::json j;
    j["synth"] = to_json(synth);
    j["model"] = {{"grid_dims", model.grid_dims},
                  {"volume_extent", vec3_to_json(model.volume_extent)},
                  {"image", {model.image_height, model.image_width}}};
    return nn::fnv1a(j.dump());
}

std::filesystem::path scene_dir(const std::filesystem::path& root, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%04d", index);
    return root / buf;
}

uint64_t scene_seed(uint64_t base_seed, int index) {
    return nn::mix_seed(base_seed, "scene." + std::to_string(index));
}

void write_scene(const std::filesystem::path& dir, const SceneSample& sample) {
    std::filesystem::create_directories(dir / "images");
    geometry::save_trajectory(dir / "cameras.json", sample.views);

    nlohmann::json gt;
    gt["seed"] = sample.seed;
    gt["room_extent"] = vec3_to_json(sample.room_extent);
    nlohmann::json objects = nlohmann::json::array();
    for (size_t i = 0; i < sample.objects.size(); ++i) {
        const heads::ObjectGT& object = sample.objects[i];
        nlohmann::json o;
        o["id"] = i;
        o["category"] = object.category;
        o["category_name"] = category_name(object.category);
        o["center"] = vec3_to_json(object.pose.center);
        o["scale"] = vec3_to_json(object.pose.scale);
        o["yaw"] = object.pose.yaw;
        o["shape_dim"] = object.shape.dims[0];
        objects.push_back(std::move(o));
    }
    gt["objects"] = std::move(objects);
    std::ofstream gt_out(dir / "gt.json");
    if (!gt_out) throw IoError("cannot write gt.json under " + dir.string());
    gt_out << gt.dump(2) << "\n";

    const int64_t n_views = sample.images.dim(0);
    const int height = static_cast<int>(sample.images.dim(1));
    const int width = static_cast<int>(sample.images.dim(2));
    std::vector<uint8_t> rgb(static_cast<size_t>(height) * width * 3);
    for (int64_t v = 0; v < n_views; ++v) {
        const float* src =
            sample.images.ptr() + v * static_cast<int64_t>(height) * width * 3;
        for (size_t i = 0; i < rgb.size(); ++i) {
            const double value = std::clamp(static_cast<double>(src[i]), 0.0, 1.0);
            rgb[i] = static_cast<uint8_t>(std::lround(value * 255.0));
        }
        common::save_png(dir / "images" / image_name(static_cast<int>(v)),
                         height, width, rgb);
    }

    write_targets(dir / "targets.bin", sample);
}

SceneSample read_scene(const std::filesystem::path& dir) {
    SceneSample sample;
    sample.views = geometry::load_trajectory(dir / "cameras.json");

    std::ifstream gt_in(dir / "gt.json");
    if (!gt_in) throw IoError("cannot read gt.json under " + dir.string());
    nlohmann::json gt;
    gt_in >> gt;
    sample.seed = gt.at("seed").get<uint64_t>();
    sample.room_extent = vec3_from_json(gt.at("room_extent"));
    for (const nlohmann::json& o : gt.at("objects")) {
        heads::ObjectGT object;
        object.category = o.at("category").get<int>();
        object.pose.center = vec3_from_json(o.at("center"));
        object.pose.scale = vec3_from_json(o.at("scale"));
        object.pose.yaw = o.at("yaw").get<double>();
        sample.objects.push_back(std::move(object));
    }

    const int n_views = static_cast<int>(sample.views.size());
    detail::check(n_views > 0, "read_scene: no views");
    const int height = sample.views[0].intrinsics.height;
    const int width = sample.views[0].intrinsics.width;
    sample.images = nn::Tensor<float>({n_views, height, width, 3});
    for (int v = 0; v < n_views; ++v) {
        int h = 0, w = 0;
        const std::vector<uint8_t> rgb =
            common::load_png(dir / "images" / image_name(v), h, w);
        detail::check(h == height && w == width,
                      "read_scene: image size does not match cameras.json");
        float* dst =
            sample.images.ptr() + static_cast<int64_t>(v) * height * width * 3;
        for (size_t i = 0; i < rgb.size(); ++i)
            dst[i] = static_cast<float>(rgb[i]) / 255.0f;
    }

    read_targets(dir / "targets.bin", sample);
    return sample;
}

DatasetManifest write_dataset(const std::filesystem::path& root, int n_scenes,
                              uint64_t base_seed, const SynthConfig& synth,
                              const backbone::BackboneConfig& model) {
    detail::check(n_scenes >= 0, "write_dataset: negative scene count");
    synth.validate();
    model.validate();
    std::filesystem::create_directories(root);

    DatasetManifest manifest;
    manifest.base_seed = base_seed;
    manifest.n_scenes = n_scenes;
    manifest.synth = synth;
    manifest.grid_dims = model.grid_dims;
    manifest.volume_extent = model.volume_extent;
    manifest.config_hash = dataset_config_hash(synth, model);
    for (int i = 0; i < n_scenes; ++i)
        manifest.scene_seeds.push_back(scene_seed(base_seed, i));

    nn::parallel_for(n_scenes, [&](int64_t i) {
        const SceneSample sample = make_scene(
            manifest.scene_seeds[static_cast<size_t>(i)], synth, model);
        write_scene(scene_dir(root, static_cast<int>(i)), sample);
    });

    nlohmann::json j;
    j["format"] = "raygrid-dataset-v1";
    j["base_seed"] = manifest.base_seed;
    j["n_scenes"] = manifest.n_scenes;
    j["scene_seeds"] = manifest.scene_seeds;
    j["config_hash"] = manifest.config_hash;
    j["synth"] = to_json(synth);
    j["model"] = {{"grid_dims", model.grid_dims},
                  {"volume_extent", vec3_to_json(model.volume_extent)},
                  {"image", {model.image_height, model.image_width}}};
    std::ofstream out(root / "manifest.json");
    if (!out) throw IoError("cannot write manifest under " + root.string());
    out << j.dump(2) << "\n";
    return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& root) {
    std::ifstream in(root / "manifest.json");
    if (!in) throw IoError("cannot read manifest under " + root.string());
    nlohmann::json j;
    in >> j;
    detail::check(j.at("format").get<std::string>() == "raygrid-dataset-v1",
                  "unsupported dataset format");
    DatasetManifest manifest;
    manifest.base_seed = j.at("base_seed").get<uint64_t>();
    manifest.n_scenes = j.at("n_scenes").get<int>();
    manifest.scene_seeds = j.at("scene_seeds").get<std::vector<uint64_t>>();
    manifest.config_hash = j.at("config_hash").get<uint64_t>();
    manifest.synth = synth_from_json(j.at("synth"));
    const nlohmann::json& model = j.at("model");
    manifest.grid_dims = model.at("grid_dims").get<std::array<int, 3>>();
    manifest.volume_extent = vec3_from_json(model.at("volume_extent"));
    return manifest;
}

}  // namespace raygrid::synth
