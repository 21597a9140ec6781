// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "raygrid/geometry/interaction.hpp"

namespace raygrid::sparse {

/// Which way information flows through the mask.
enum class Direction {
    kPixelsToVoxels,  // rows are voxels, columns are pixels
    kVoxelsToPixels,  // rows are pixels, columns are voxels
};

/// Sparse attention pattern in CSR form, plus a transposed (CSC) view used to
/// accumulate source-side gradients as deterministic per-column gathers.
struct SparseMask {
    int64_t n_rows = 0;
    int64_t n_cols = 0;
    std::vector<int64_t> row_offsets;   // n_rows + 1
    std::vector<int32_t> col_index;     // nnz, ascending within each row
    std::vector<int64_t> colT_offsets;  // n_cols + 1
    std::vector<int32_t> rowT_index;    // nnz, row of each transposed entry
    std::vector<int64_t> entryT;        // nnz, CSR entry id of each transposed entry

    int64_t nnz() const { return static_cast<int64_t>(col_index.size()); }

    /// Builds one direction of the attention pattern from a ray-voxel index.
    /// Pixel ids are (view * height + row) * width + col; voxel ids use the
    /// x-fastest flattening.
    static SparseMask from_index(const geometry::InteractionIndex& index,
                                 Direction direction);

    /// All-pairs mask (used for the dense decoder attention).
    static SparseMask full(int64_t n_rows, int64_t n_cols);

    /// Populates the transposed view; from_index and full already call this.
    void build_transpose();

    void validate() const;
};

}  // namespace raygrid::sparse
