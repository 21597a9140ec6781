// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <utility>

#include "raygrid/trainer/trainer.hpp"

namespace raygrid::trainer {

CachedScene compact_scene(const synth::SceneSample& sample) {
    CachedScene scene;
    scene.objects = sample.objects;
    scene.views = sample.views;
    scene.grid = sample.grid;
    scene.occupancy = sample.occupancy;
    scene.amodal_masks = sample.amodal_masks;
    scene.seed = sample.seed;
    scene.height = static_cast<int>(sample.images.dim(1));
    scene.width = static_cast<int>(sample.images.dim(2));
    scene.rgb.resize(sample.images.data.size());
    for (size_t i = 0; i < scene.rgb.size(); ++i) {
        const double value =
            std::clamp(static_cast<double>(sample.images.data[i]), 0.0, 1.0);
        scene.rgb[i] = static_cast<uint8_t>(std::lround(value * 255.0));
    }
    return scene;
}

nn::Tensor<double> view_images(const CachedScene& scene, std::span<const int> view_ids) {
    const int n_views = static_cast<int>(scene.views.size());
    const int64_t stride = static_cast<int64_t>(scene.height) * scene.width * 3;
    nn::Tensor<double> images(
        {static_cast<int64_t>(view_ids.size()), scene.height, scene.width, 3});
    double* dst = images.ptr();
    for (const int id : view_ids) {
        detail::check(id >= 0 && id < n_views, "view_images: view id out of range");
        const uint8_t* src = scene.rgb.data() + static_cast<size_t>(id) * stride;
        for (int64_t i = 0; i < stride; ++i) dst[i] = static_cast<double>(src[i]) / 255.0;
        dst += stride;
    }
    return images;
}

SceneSet::SceneSet(int n_scenes, std::function<synth::SceneSample(int)> load)
    : n_(n_scenes), load_(std::move(load)) {
    detail::check(n_ >= 0, "SceneSet: negative scene count");
    cache_.resize(static_cast<size_t>(n_));
}

SceneSet SceneSet::generate(const ExperimentConfig& config, uint64_t base_seed,
                            int n_scenes) {
    config.validate();
    return SceneSet(n_scenes, [config, base_seed](int i) {
        return synth::make_scene(synth::scene_seed(base_seed, i), config.synth,
                                 config.backbone);
    });
}

SceneSet SceneSet::from_dataset(const std::filesystem::path& root,
                                const ExperimentConfig& config) {
    config.validate();
    const synth::DatasetManifest manifest = synth::read_manifest(root);
    detail::check(manifest.config_hash ==
                      synth::dataset_config_hash(config.synth, config.backbone),
                  "dataset at " + root.string() +
                      " was generated under a different configuration");
    return SceneSet(manifest.n_scenes, [root](int i) {
        return synth::read_scene(synth::scene_dir(root, i));
    });
}

const CachedScene& SceneSet::at(int index) {
    detail::check(index >= 0 && index < n_, "SceneSet: scene index out of range");
    auto& slot = cache_[static_cast<size_t>(index)];
    if (!slot) slot = std::make_unique<CachedScene>(compact_scene(load_(index)));
    return *slot;
}

std::vector<int> eval_view_ids(int n_total, int k) {
    detail::check(k >= 1 && k <= n_total, "eval_view_ids: need 1 <= k <= n_total");
    std::vector<int> ids(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i)
        ids[static_cast<size_t>(i)] =
            static_cast<int>(static_cast<int64_t>(i) * n_total / k);
    return ids;
}

std::vector<int> train_view_ids(int n_total, int k, nn::Rng& rng) {
    detail::check(k >= 1 && k <= n_total, "train_view_ids: need 1 <= k <= n_total");
    const int offset = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n_total)));
    std::vector<int> ids(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        const int lo = static_cast<int>(static_cast<int64_t>(i) * n_total / k);
        const int hi = static_cast<int>(static_cast<int64_t>(i + 1) * n_total / k);
        const int pick =
            lo + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(hi - lo)));
        ids[static_cast<size_t>(i)] = (pick + offset) % n_total;
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace raygrid::trainer
