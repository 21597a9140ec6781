// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "raygrid/nn/rng.hpp"
#include "raygrid/nn/tensor.hpp"
#include "raygrid/sparse/mask.hpp"

namespace raygrid::sparse {

/// Projection weights of one multi-head attention layer. No biases; heads are
/// packed side by side, so wq/wk/wv are [d_model, n_heads*d_head] and wo is
/// [n_heads*d_head, d_model].
template <typename T>
struct AttentionParams {
    int d_model = 0;
    int n_heads = 0;
    int d_head = 0;
    nn::Tensor<T> wq, wk, wv, wo;

    static AttentionParams create(int d_model, int n_heads, int d_head);
    void validate() const;
    int d_inner() const { return n_heads * d_head; }
};

/// Activations stashed by the forward pass for the backward pass. Its size is
/// linear in the mask entry count (the attention weights) plus terms linear in
/// the row/column counts; nothing quadratic is ever materialized.
template <typename T>
struct AttentionCache {
    nn::Tensor<T> target, source;    // inputs, [R, d_model] and [S, d_model]
    nn::Tensor<T> q, k, v;           // projections, [R|S, n_heads*d_head]
    nn::Tensor<T> weights;           // softmax weights, [n_heads, nnz]
    nn::Tensor<T> context;           // pre-output-projection, [R, n_heads*d_head]
    const SparseMask* mask = nullptr;

    int64_t byte_size() const;
};

template <typename T>
struct AttentionGrads {
    nn::Tensor<T> d_target, d_source;
    nn::Tensor<T> d_wq, d_wk, d_wv, d_wo;
};

/// Multi-head attention restricted to the mask entries: each target row
/// attends only to the source rows listed in its mask row. Rows with no
/// entries produce zero output. When cache is non-null it is filled for the
/// backward pass.
template <typename T>
nn::Tensor<T> sparse_mha_forward(const nn::Tensor<T>& target,
                                 const nn::Tensor<T>& source,
                                 const SparseMask& mask,
                                 const AttentionParams<T>& params,
                                 AttentionCache<T>* cache = nullptr);

template <typename T>
AttentionGrads<T> sparse_mha_backward(const AttentionCache<T>& cache,
                                      const AttentionParams<T>& params,
                                      const nn::Tensor<T>& grad_output);

/// Reference implementation that materializes the full masked score matrix
/// with plain loops. Small problems only; used to cross-check the sparse path.
template <typename T>
nn::Tensor<T> dense_oracle_forward(const nn::Tensor<T>& target,
                                   const nn::Tensor<T>& source,
                                   const SparseMask& mask,
                                   const AttentionParams<T>& params);

}  // namespace raygrid::sparse
