// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "raygrid/nn/params.hpp"

namespace raygrid::trainer {

/// Checkpoint file: magic "RGCK", version, model hash, store seed, step
/// counter, then every parameter in name order with its value and both
/// optimizer moments as little-endian f64. Save -> load -> save is
/// byte-identical.
void save_checkpoint(const std::filesystem::path& path,
                     const nn::ParamStore<double>& params, int64_t step,
                     uint64_t config_hash);

struct LoadedCheckpoint {
    nn::ParamStore<double> params;
    int64_t step = 0;
    uint64_t config_hash = 0;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace raygrid::trainer
