// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "raygrid/synth/synth.hpp"

namespace raygrid::synth {

nlohmann::json to_json(const SynthConfig& config);
/// Partial overrides: absent keys keep the base values.
SynthConfig synth_from_json(const nlohmann::json& j, SynthConfig base = {});

/// Hash over every field that influences generated bytes: the synth config
/// plus the model's grid and image geometry.
uint64_t dataset_config_hash(const SynthConfig& synth,
                             const backbone::BackboneConfig& model);

struct DatasetManifest {
    uint64_t base_seed = 0;
    int n_scenes = 0;
    std::vector<uint64_t> scene_seeds;
    uint64_t config_hash = 0;
    SynthConfig synth;
    std::array<int, 3> grid_dims = {0, 0, 0};
    Vec3 volume_extent = Vec3::Zero();
};

std::filesystem::path scene_dir(const std::filesystem::path& root, int index);

/// Writes scene_<id>/{cameras.json, gt.json, images/*.png, targets.bin}.
void write_scene(const std::filesystem::path& dir, const SceneSample& sample);
SceneSample read_scene(const std::filesystem::path& dir);

/// Generates n_scenes samples (in parallel, one seeded stream per scene) and
/// writes them plus manifest.json under root.
DatasetManifest write_dataset(const std::filesystem::path& root, int n_scenes,
                              uint64_t base_seed, const SynthConfig& synth,
                              const backbone::BackboneConfig& model);
DatasetManifest read_manifest(const std::filesystem::path& root);

/// Per-scene seed stream: mix of the dataset seed and the scene index.
uint64_t scene_seed(uint64_t base_seed, int index);

}  // namespace raygrid::synth
