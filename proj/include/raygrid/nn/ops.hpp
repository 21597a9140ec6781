// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "raygrid/nn/tape.hpp"
#include "raygrid/sparse/attention.hpp"

namespace raygrid::nn {

/// Spatial configuration of a convolution. `rank` is the number of spatial
/// axes (2 or 3); only the first `rank` entries of each array are used.
struct ConvSpec {
    int rank = 2;
    std::array<int, 3> kernel = {3, 3, 3};
    std::array<int, 3> stride = {1, 1, 1};
    std::array<int, 3> pad = {1, 1, 1};

    static ConvSpec make(int rank, int k, int s, int p) {
        ConvSpec spec;
        spec.rank = rank;
        spec.kernel = {k, k, k};
        spec.stride = {s, s, s};
        spec.pad = {p, p, p};
        return spec;
    }
};

namespace ops {

// ---- elementwise and linear algebra ----

template <typename T>
int add(Tape<T>& tape, int a, int b);

/// Adds a tensor that does not participate in differentiation (for fixed
/// positional encodings and similar constants).
template <typename T>
int add_const(Tape<T>& tape, int x, const Tensor<T>& c);

/// Elementwise product with a constant tensor of the same shape.
template <typename T>
int mul_const(Tape<T>& tape, int x, const Tensor<T>& c);

template <typename T>
int scale(Tape<T>& tape, int x, double factor);

template <typename T>
int relu(Tape<T>& tape, int x);

template <typename T>
int sigmoid(Tape<T>& tape, int x);

/// y = x @ w for x [R, C], w [C, D].
template <typename T>
int matmul(Tape<T>& tape, int x, int w);

/// Adds bias b [C] to every row of x [..., C].
template <typename T>
int add_bias(Tape<T>& tape, int x, int b);

template <typename T>
int layer_norm(Tape<T>& tape, int x, int gamma, int beta, double eps = 1e-5);

template <typename T>
int reshape(Tape<T>& tape, int x, std::vector<int64_t> shape);

/// Selects rows of x [R, C] by index; indices may repeat.
template <typename T>
int gather_rows(Tape<T>& tape, int x, std::vector<int64_t> indices);

/// sum_i coeffs[i] * xs[i] over scalar ids.
template <typename T>
int weighted_sum(Tape<T>& tape, const std::vector<int>& xs,
                 const std::vector<double>& coeffs);

// ---- convolutions (channels-last) ----

/// x [N, spatial..., Ci], w [Co, kernel..., Ci], b [Co].
template <typename T>
int conv_nd(Tape<T>& tape, int x, int w, int b, const ConvSpec& spec);

/// Transposed convolution; out = (in-1)*stride - 2*pad + kernel per axis.
template <typename T>
int conv_transpose_nd(Tape<T>& tape, int x, int w, int b, const ConvSpec& spec);

// ---- attention ----

template <typename T>
struct AttentionVars {
    int wq = -1, wk = -1, wv = -1, wo = -1;
    int n_heads = 0;
    int d_head = 0;
};

/// Multi-head attention restricted to the mask; target/source are [R, d] and
/// [S, d] variables. The mask must stay alive until backward() has run.
template <typename T>
int sparse_mha(Tape<T>& tape, int target, int source,
               std::shared_ptr<const sparse::SparseMask> mask,
               const AttentionVars<T>& vars);

/// Per-voxel mean of the pixel features selected by the mask rows (mask rows
/// are voxels, columns pixels). Rows with no entries stay zero.
template <typename T>
int unproject_mean(Tape<T>& tape, int pixels,
                   std::shared_ptr<const sparse::SparseMask> mask);

// ---- losses (all produce scalars) ----

/// Mean cross-entropy of logits [R, K] against integer targets.
template <typename T>
int softmax_ce(Tape<T>& tape, int logits, std::vector<int> targets);

/// Mean binary cross-entropy with logits against constant targets in [0, 1].
template <typename T>
int bce_logits(Tape<T>& tape, int logits, Tensor<T> targets);

/// Smooth-L1 with threshold beta, summed over elements.
template <typename T>
int huber_sum(Tape<T>& tape, int pred, Tensor<T> target, double beta);

/// Smooth-L1 on angle differences wrapped to (-pi, pi], summed.
template <typename T>
int yaw_huber_sum(Tape<T>& tape, int pred, Tensor<T> target, double beta);

/// |pred - target| summed over elements.
template <typename T>
int l1_sum(Tape<T>& tape, int pred, Tensor<T> target);

/// Mean squared error over elements.
template <typename T>
int mse_mean(Tape<T>& tape, int pred, Tensor<T> target);

}  // namespace ops
}  // namespace raygrid::nn
