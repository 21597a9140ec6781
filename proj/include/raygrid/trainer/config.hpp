// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "raygrid/backbone/backbone.hpp"
#include "raygrid/heads/detection.hpp"
#include "raygrid/synth/synth.hpp"

namespace raygrid::trainer {

/// Optimization schedule and loss mix. Phase 1 trains the occupancy objective
/// alone; phase 2 adds detection and segmentation (and optionally a
/// novel-view MSE term, off by default).
struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 5e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int phase1_steps = 2000;
    int phase2_steps = 8000;
    int batch_size = 1;  // scenes accumulated per optimizer step
    uint64_t seed = 0;
    int frames_train = 4;
    int frames_eval = 12;
    double w_occupancy = 1.0;
    double w_segmentation = 0.5;
    double w_detection = 1.0;
    double w_nvs = 0.0;
    int eval_every = 1000;     // 0 disables periodic held-out evaluation
    int checkpoint_every = 0;  // 0 keeps only the final checkpoint
    int n_eval_scenes = 20;

    static TrainConfig toy();
    /// Published schedule: 200k + 200k steps, 20 training frames, 96 at
    /// evaluation. Recorded for documentation; desk-scale runs use toy().
    static TrainConfig paper();

    void validate() const;
};

/// Everything a run needs: scene generation, model architecture, schedule.
struct ExperimentConfig {
    synth::SynthConfig synth;
    backbone::BackboneConfig backbone;
    heads::DetectionConfig detection;
    TrainConfig train;

    static ExperimentConfig toy();
    static ExperimentConfig paper();

    /// Per-section validation plus cross-section consistency (image sizes,
    /// shape resolution, category count, frame counts, query capacity).
    void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const backbone::BackboneConfig& config);
nlohmann::json to_json(const heads::DetectionConfig& config);
nlohmann::json to_json(const ExperimentConfig& config);

/// Partial overrides: absent keys keep the passed-in defaults.
TrainConfig train_from_json(const nlohmann::json& j, TrainConfig base = TrainConfig::toy());
backbone::BackboneConfig backbone_from_json(const nlohmann::json& j,
                                            backbone::BackboneConfig base);
heads::DetectionConfig detection_from_json(const nlohmann::json& j,
                                           heads::DetectionConfig base);
ExperimentConfig experiment_from_json(const nlohmann::json& j,
                                      ExperimentConfig base = ExperimentConfig::toy());

/// Hash over the architecture sections only (backbone + detection); stored in
/// checkpoints so a checkpoint cannot silently load into a different model.
uint64_t model_hash(const ExperimentConfig& config);
/// Hash over the full experiment, including data generation and schedule.
uint64_t experiment_hash(const ExperimentConfig& config);

}  // namespace raygrid::trainer
