// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/sparse/mask.hpp"

#include <algorithm>
#include <numeric>

namespace raygrid::sparse {

SparseMask SparseMask::from_index(const geometry::InteractionIndex& index,
                                  Direction direction) {
    SparseMask mask;
    const int64_t n_pix = index.n_pixels_total();
    const int64_t n_vox = index.n_voxels_total();
    const bool pix_to_vox = direction == Direction::kPixelsToVoxels;
    mask.n_rows = pix_to_vox ? n_vox : n_pix;
    mask.n_cols = pix_to_vox ? n_pix : n_vox;

    std::vector<std::pair<int64_t, int64_t>> entries;  // (row, col)
    entries.reserve(index.pairs.size());
    for (const auto& p : index.pairs) {
        const int64_t pix = index.pixel_flat(p.view, p.row, p.col);
        const int64_t vox = index.voxel_flat(p.vx, p.vy, p.vz);
        if (pix_to_vox)
            entries.emplace_back(vox, pix);
        else
            entries.emplace_back(pix, vox);
    }
    std::sort(entries.begin(), entries.end());

    mask.row_offsets.assign(static_cast<size_t>(mask.n_rows) + 1, 0);
    mask.col_index.reserve(entries.size());
    for (const auto& [r, c] : entries) {
        ++mask.row_offsets[static_cast<size_t>(r) + 1];
        mask.col_index.push_back(static_cast<int32_t>(c));
    }
    std::partial_sum(mask.row_offsets.begin(), mask.row_offsets.end(),
                     mask.row_offsets.begin());
    mask.build_transpose();
    return mask;
}

SparseMask SparseMask::full(int64_t n_rows, int64_t n_cols) {
    SparseMask mask;
    mask.n_rows = n_rows;
    mask.n_cols = n_cols;
    mask.row_offsets.resize(static_cast<size_t>(n_rows) + 1);
    mask.col_index.reserve(static_cast<size_t>(n_rows * n_cols));
    for (int64_t r = 0; r <= n_rows; ++r) mask.row_offsets[static_cast<size_t>(r)] = r * n_cols;
    for (int64_t r = 0; r < n_rows; ++r)
        for (int64_t c = 0; c < n_cols; ++c)
            mask.col_index.push_back(static_cast<int32_t>(c));
    mask.build_transpose();
    return mask;
}

void SparseMask::build_transpose() {
    const int64_t n = nnz();
    colT_offsets.assign(static_cast<size_t>(n_cols) + 1, 0);
    for (int32_t c : col_index) ++colT_offsets[static_cast<size_t>(c) + 1];
    std::partial_sum(colT_offsets.begin(), colT_offsets.end(), colT_offsets.begin());
    rowT_index.resize(static_cast<size_t>(n));
    entryT.resize(static_cast<size_t>(n));
    std::vector<int64_t> cursor(colT_offsets.begin(), colT_offsets.end() - 1);
    for (int64_t r = 0; r < n_rows; ++r) {
        for (int64_t e = row_offsets[static_cast<size_t>(r)];
             e < row_offsets[static_cast<size_t>(r) + 1]; ++e) {
            const int32_t c = col_index[static_cast<size_t>(e)];
            const int64_t slot = cursor[static_cast<size_t>(c)]++;
            rowT_index[static_cast<size_t>(slot)] = static_cast<int32_t>(r);
            entryT[static_cast<size_t>(slot)] = e;
        }
    }
}

void SparseMask::validate() const {
    detail::check(n_rows >= 0 && n_cols >= 0, "mask sizes must be non-negative");
    detail::check(static_cast<int64_t>(row_offsets.size()) == n_rows + 1,
                  "row_offsets size mismatch");
    detail::check(row_offsets.front() == 0 && row_offsets.back() == nnz(),
                  "row_offsets must span the entry list");
    for (size_t r = 0; r + 1 < row_offsets.size(); ++r) {
        detail::check(row_offsets[r] <= row_offsets[r + 1],
                      "row_offsets must be non-decreasing");
        for (int64_t e = row_offsets[r]; e < row_offsets[r + 1]; ++e) {
            const int32_t c = col_index[static_cast<size_t>(e)];
            detail::check(c >= 0 && c < n_cols, "mask column out of range");
            detail::check(e == row_offsets[r] || col_index[static_cast<size_t>(e - 1)] < c,
                          "mask columns must be ascending within a row");
        }
    }
    detail::check(static_cast<int64_t>(colT_offsets.size()) == n_cols + 1 &&
                      static_cast<int64_t>(entryT.size()) == nnz(),
                  "transposed view missing; call build_transpose");
}

}  // namespace raygrid::sparse
