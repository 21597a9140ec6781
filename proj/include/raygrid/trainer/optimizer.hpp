// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raygrid/nn/params.hpp"
#include "raygrid/trainer/config.hpp"

namespace raygrid::trainer {

/// One AdamW update over every parameter in the store, reading the
/// accumulated gradients and mutating values and moments in place. Weight
/// decay is decoupled: it scales the pre-step value and is applied even where
/// the gradient is zero. `step` is 1-based and drives bias correction.
template <typename T>
void optimizer_step(nn::ParamStore<T>& params, int64_t step, const TrainConfig& config);

}  // namespace raygrid::trainer
