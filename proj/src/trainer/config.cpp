// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/trainer/config.hpp"

#include <string>

#include "raygrid/nn/rng.hpp"
#include "raygrid/synth/dataset.hpp"

namespace raygrid::trainer {

namespace {

nlohmann::json vec3_to_json(const Vec3& v) {
    return nlohmann::json::array({v.x(), v.y(), v.z()});
}

Vec3 vec3_from_json(const nlohmann::json& j) {
    detail::check(j.is_array() && j.size() == 3, "expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

TrainConfig TrainConfig::toy() { return {}; }

TrainConfig TrainConfig::paper() {
    TrainConfig c;
    c.phase1_steps = 200000;
    c.phase2_steps = 200000;
    c.frames_train = 20;
    c.frames_eval = 96;
    return c;
}

void TrainConfig::validate() const {
    detail::check(learning_rate > 0.0 && weight_decay >= 0.0,
                  "learning rate must be positive, weight decay non-negative");
    detail::check(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
                  "beta1/beta2 must lie in [0, 1)");
    detail::check(eps > 0.0, "eps must be positive");
    detail::check(phase1_steps >= 0 && phase2_steps >= 0, "step counts must be >= 0");
    detail::check(batch_size >= 1, "batch_size must be >= 1");
    detail::check(frames_train >= 1 && frames_eval >= 1, "frame counts must be >= 1");
    detail::check(w_occupancy >= 0.0 && w_segmentation >= 0.0 && w_detection >= 0.0 &&
                      w_nvs >= 0.0,
                  "loss weights must be non-negative");
    detail::check(eval_every >= 0 && checkpoint_every >= 0 && n_eval_scenes >= 0,
                  "eval/checkpoint cadence must be >= 0");
}

ExperimentConfig ExperimentConfig::toy() {
    return {synth::SynthConfig::toy(), backbone::BackboneConfig::toy(),
            heads::DetectionConfig::toy(), TrainConfig::toy()};
}

ExperimentConfig ExperimentConfig::paper() {
    return {synth::SynthConfig::paper(), backbone::BackboneConfig::paper(),
            heads::DetectionConfig::paper(), TrainConfig::paper()};
}

void ExperimentConfig::validate() const {
    synth.validate();
    backbone.validate();
    detection.validate(backbone.d_model);
    train.validate();
    detail::check(synth.image_height == backbone.image_height &&
                      synth.image_width == backbone.image_width,
                  "rendered and model image sizes must match");
    detail::check(detection.shape_dim == synth.shape_dim,
                  "detection shape_dim must match the generator's shape_dim");
    detail::check(detection.n_categories == synth.n_categories(),
                  "detection category count must match the generator");
    detail::check(train.frames_train <= synth.n_frames &&
                      train.frames_eval <= synth.n_frames,
                  "frames per scene cannot exceed the trajectory length");
    detail::check(synth.n_objects_max <= detection.n_queries,
                  "scenes may contain more objects than query slots");
}

nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["learning_rate"] = c.learning_rate;
    j["weight_decay"] = c.weight_decay;
    j["betas"] = {c.beta1, c.beta2};
    j["eps"] = c.eps;
    j["phase1_steps"] = c.phase1_steps;
    j["phase2_steps"] = c.phase2_steps;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    j["frames_train"] = c.frames_train;
    j["frames_eval"] = c.frames_eval;
    j["loss_weights"] = {{"occupancy", c.w_occupancy},
                         {"segmentation", c.w_segmentation},
                         {"detection", c.w_detection},
                         {"nvs", c.w_nvs}};
    j["eval_every"] = c.eval_every;
    j["checkpoint_every"] = c.checkpoint_every;
    j["n_eval_scenes"] = c.n_eval_scenes;
    return j;
}

nlohmann::json to_json(const backbone::BackboneConfig& c) {
    nlohmann::json j;
    j["d_model"] = c.d_model;
    j["n_heads"] = c.n_heads;
    j["n_blocks"] = c.n_blocks;
    j["ffn_hidden"] = {c.ffn_hidden_2d, c.ffn_hidden_3d};
    j["grid_dims"] = c.grid_dims;
    j["volume_extent"] = vec3_to_json(c.volume_extent);
    j["image"] = {c.image_height, c.image_width};
    j["positional_encoding"] = c.positional_encoding;
    return j;
}

nlohmann::json to_json(const heads::DetectionConfig& c) {
    nlohmann::json j;
    j["n_queries"] = c.n_queries;
    j["n_layers"] = c.n_layers;
    j["n_heads"] = c.n_heads;
    j["n_categories"] = c.n_categories;
    j["shape_dim"] = c.shape_dim;
    j["shape_channels"] = c.shape_channels;
    j["huber_beta"] = {c.huber_beta_center, c.huber_beta_yaw};
    j["loss_weights"] = {{"class", c.w_class},
                         {"center", c.w_center},
                         {"scale", c.w_scale},
                         {"yaw", c.w_yaw},
                         {"shape", c.w_shape}};
    return j;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["synth"] = synth::to_json(c.synth);
    j["backbone"] = to_json(c.backbone);
    j["detection"] = to_json(c.detection);
    j["train"] = to_json(c.train);
    return j;
}

TrainConfig train_from_json(const nlohmann::json& j, TrainConfig c) {
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("betas")) {
        c.beta1 = j["betas"][0].get<double>();
        c.beta2 = j["betas"][1].get<double>();
    }
    if (j.contains("eps")) c.eps = j["eps"].get<double>();
    if (j.contains("phase1_steps")) c.phase1_steps = j["phase1_steps"].get<int>();
    if (j.contains("phase2_steps")) c.phase2_steps = j["phase2_steps"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("frames_train")) c.frames_train = j["frames_train"].get<int>();
    if (j.contains("frames_eval")) c.frames_eval = j["frames_eval"].get<int>();
    if (j.contains("loss_weights")) {
        const nlohmann::json& w = j["loss_weights"];
        if (w.contains("occupancy")) c.w_occupancy = w["occupancy"].get<double>();
        if (w.contains("segmentation")) c.w_segmentation = w["segmentation"].get<double>();
        if (w.contains("detection")) c.w_detection = w["detection"].get<double>();
        if (w.contains("nvs")) c.w_nvs = w["nvs"].get<double>();
    }
    if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<int>();
    if (j.contains("checkpoint_every"))
        c.checkpoint_every = j["checkpoint_every"].get<int>();
    if (j.contains("n_eval_scenes")) c.n_eval_scenes = j["n_eval_scenes"].get<int>();
    c.validate();
    return c;
}

backbone::BackboneConfig backbone_from_json(const nlohmann::json& j,
                                            backbone::BackboneConfig c) {
    if (j.contains("d_model")) c.d_model = j["d_model"].get<int>();
    if (j.contains("n_heads")) c.n_heads = j["n_heads"].get<int>();
    if (j.contains("n_blocks")) c.n_blocks = j["n_blocks"].get<int>();
    if (j.contains("ffn_hidden")) {
        c.ffn_hidden_2d = j["ffn_hidden"][0].get<int>();
        c.ffn_hidden_3d = j["ffn_hidden"][1].get<int>();
    }
    if (j.contains("grid_dims")) c.grid_dims = j["grid_dims"].get<std::array<int, 3>>();
    if (j.contains("volume_extent")) c.volume_extent = vec3_from_json(j["volume_extent"]);
    if (j.contains("image")) {
        c.image_height = j["image"][0].get<int>();
        c.image_width = j["image"][1].get<int>();
    }
    if (j.contains("positional_encoding"))
        c.positional_encoding = j["positional_encoding"].get<bool>();
    c.validate();
    return c;
}

heads::DetectionConfig detection_from_json(const nlohmann::json& j,
                                           heads::DetectionConfig c) {
    if (j.contains("n_queries")) c.n_queries = j["n_queries"].get<int>();
    if (j.contains("n_layers")) c.n_layers = j["n_layers"].get<int>();
    if (j.contains("n_heads")) c.n_heads = j["n_heads"].get<int>();
    if (j.contains("n_categories")) c.n_categories = j["n_categories"].get<int>();
    if (j.contains("shape_dim")) c.shape_dim = j["shape_dim"].get<int>();
    if (j.contains("shape_channels")) c.shape_channels = j["shape_channels"].get<int>();
    if (j.contains("huber_beta")) {
        c.huber_beta_center = j["huber_beta"][0].get<double>();
        c.huber_beta_yaw = j["huber_beta"][1].get<double>();
    }
    if (j.contains("loss_weights")) {
        const nlohmann::json& w = j["loss_weights"];
        if (w.contains("class")) c.w_class = w["class"].get<double>();
        if (w.contains("center")) c.w_center = w["center"].get<double>();
        if (w.contains("scale")) c.w_scale = w["scale"].get<double>();
        if (w.contains("yaw")) c.w_yaw = w["yaw"].get<double>();
        if (w.contains("shape")) c.w_shape = w["shape"].get<double>();
    }
    return c;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j, ExperimentConfig c) {
    if (j.contains("synth")) c.synth = synth::synth_from_json(j["synth"], c.synth);
    if (j.contains("backbone")) c.backbone = backbone_from_json(j["backbone"], c.backbone);
    if (j.contains("detection"))
        c.detection = detection_from_json(j["detection"], c.detection);
    if (j.contains("train")) c.train = train_from_json(j["train"], c.train);
    c.validate();
    return c;
}

uint64_t model_hash(const ExperimentConfig& config) {
    nlohmann::json j;
    j["backbone"] = to_json(config.backbone);
    j["detection"] = to_json(config.detection);
    return nn::fnv1a(j.dump());
}

uint64_t experiment_hash(const ExperimentConfig& config) {
    return nn::fnv1a(to_json(config).dump());
}

}  // namespace raygrid::trainer
