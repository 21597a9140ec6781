// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "raygrid/eval/metrics.hpp"
#include "raygrid/synth/dataset.hpp"
#include "raygrid/trainer/checkpoint.hpp"
#include "raygrid/trainer/config.hpp"

namespace raygrid::trainer {

/// A scene held in training memory: images are quantized to 8-bit exactly as
/// the PNG writer does, so training from regenerated scenes and training from
/// a written dataset consume identical bytes.
struct CachedScene {
    std::vector<heads::ObjectGT> objects;
    std::vector<geometry::CameraView> views;
    geometry::VoxelGridSpec grid;
    BitVolume occupancy;
    std::vector<BitImage> amodal_masks;
    std::vector<uint8_t> rgb;  // [n_views, height, width, 3]
    int height = 0;
    int width = 0;
    uint64_t seed = 0;
};

CachedScene compact_scene(const synth::SceneSample& sample);

/// Images of the selected views as [k, height, width, 3] doubles in [0, 1].
nn::Tensor<double> view_images(const CachedScene& scene, std::span<const int> view_ids);

/// Lazily materialized scene collection, either regenerated from seeds or
/// read from a dataset directory. Scenes stay cached after first access.
class SceneSet {
  public:
    SceneSet(int n_scenes, std::function<synth::SceneSample(int)> load);

    static SceneSet generate(const ExperimentConfig& config, uint64_t base_seed,
                             int n_scenes);
    /// Rejects datasets whose manifest hash does not match the configuration.
    static SceneSet from_dataset(const std::filesystem::path& root,
                                 const ExperimentConfig& config);

    int size() const { return n_; }
    const CachedScene& at(int index);

  private:
    int n_ = 0;
    std::function<synth::SceneSample(int)> load_;
    std::vector<std::unique_ptr<CachedScene>> cache_;
};

/// Evenly spaced view subset starting at frame 0.
std::vector<int> eval_view_ids(int n_total, int k);
/// Stratified random subset: one draw per arc of the trajectory plus a random
/// global rotation, so any step sees views spread around the orbit.
std::vector<int> train_view_ids(int n_total, int k, nn::Rng& rng);

struct ForwardFlags {
    bool detection = true;
    bool segmentation = true;
};

/// Tape ids of one scene forward pass; layers is empty when detection is off.
struct SceneForward {
    backbone::StreamIds<double> streams;
    int occ_logits = -1;
    int seg_logits = -1;
    std::vector<heads::DecoderLayerIds> layers;
};

SceneForward model_forward(nn::Tape<double>& tape, nn::TapeBinding<double>& binding,
                           const nn::Tensor<double>& images,
                           const backbone::SceneMasks& masks,
                           const ExperimentConfig& config,
                           const ForwardFlags& flags = {});

/// Loss values of one scene, already multiplied by their task weights.
struct StepLosses {
    double total = 0.0;
    double occupancy = 0.0;
    double segmentation = 0.0;
    double detection = 0.0;
    double nvs = 0.0;
    double det_class = 0.0;
    double det_center = 0.0;
    double det_scale = 0.0;
    double det_yaw = 0.0;
    double det_shape = 0.0;
    int n_matched = 0;

    void accumulate(const StepLosses& other, double factor);
};

/// Builds the forward graph and the phase's weighted loss for one scene;
/// returns the total-loss tape id. Phase 1 supervises occupancy alone.
/// nvs_view indexes into view_ids and selects the re-rendered target view;
/// pass -1 to skip the novel-view term.
int scene_loss(nn::Tape<double>& tape, nn::TapeBinding<double>& binding,
               const CachedScene& scene, std::span<const int> view_ids, int phase,
               int nvs_view, const ExperimentConfig& config, StepLosses& out);

struct TrainOutput {
    nn::ParamStore<double> params;
    int64_t steps = 0;
    StepLosses first;
    StepLosses last;
    std::filesystem::path checkpoint_path;
};

/// Two-phase AdamW training. Writes config.json, train_log.jsonl (one JSON
/// object per step), eval_log.jsonl when a held-out set is given, and the
/// final checkpoint under run_dir. A non-finite loss dumps diagnostics.json
/// and throws. Runs with the same config and seed produce byte-identical
/// logs and checkpoints.
TrainOutput train(const ExperimentConfig& config, SceneSet& train_scenes,
                  SceneSet* heldout, const std::filesystem::path& run_dir);

/// Full pipeline on one set of posed views: occupancy grid (probability 0.5
/// cut) plus per-slot predictions with padding slots dropped. The grid
/// defaults to the configured volume centered on the camera positions.
struct InferResult {
    geometry::VoxelGridSpec grid;
    BitVolume occupancy;
    std::vector<heads::ObjectPrediction> objects;
};

InferResult infer(nn::ParamStore<double>& params, const ExperimentConfig& config,
                  std::span<const geometry::CameraView> views,
                  const nn::Tensor<double>& images,
                  const geometry::VoxelGridSpec* grid = nullptr);

/// infer() on a cached scene's selected views, against the scene's own grid.
InferResult predict_scene(nn::ParamStore<double>& params,
                          const ExperimentConfig& config, const CachedScene& scene,
                          std::span<const int> view_ids);

/// Renders the scene from a query viewpoint through the novel-view head;
/// returns [1, height, width, 3] in (0, 1).
nn::Tensor<double> render_novel_view(nn::ParamStore<double>& params,
                                     const ExperimentConfig& config,
                                     std::span<const geometry::CameraView> input_views,
                                     const nn::Tensor<double>& images,
                                     const geometry::CameraView& query,
                                     const geometry::VoxelGridSpec* grid = nullptr);

struct EvalReport {
    int n_scenes = 0;
    int n_frames = 0;
    double mean_occupancy_iou = 0.0;
    eval::PoseAccuracyResult accuracy_strict;   // 0.2 m / 20 deg / 20%
    eval::PoseAccuracyResult accuracy_relaxed;  // 0.4 m / 40 deg / 40%
    eval::DetectionPRF prf;                     // box IoU 0.25

    nlohmann::json to_json() const;
};

EvalReport evaluate(nn::ParamStore<double>& params, const ExperimentConfig& config,
                    SceneSet& scenes, int n_frames);

}  // namespace raygrid::trainer
