// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "raygrid/nn/tensor.hpp"

namespace raygrid::heads {

/// Minimum-cost assignment of rows to distinct columns for an [n, m] cost
/// matrix with n <= m (shortest augmenting path with potentials). Returns the
/// column chosen for each row.
std::vector<int> hungarian_match(const nn::Tensor<double>& cost);

}  // namespace raygrid::heads
