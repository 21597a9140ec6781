// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace raygrid::nn {

template <typename T>
using MatMap =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap = Eigen::Map<
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// C[m,n] = A * B with optional transposes and accumulation. A is [m,k]
/// (or [k,m] when trans_a), B is [k,n] (or [n,k] when trans_b).
template <typename T>
void gemm(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n,
          bool trans_a = false, bool trans_b = false, bool accumulate = false) {
    ConstMatMap<T> ma(a, trans_a ? k : m, trans_a ? m : k);
    ConstMatMap<T> mb(b, trans_b ? n : k, trans_b ? k : n);
    MatMap<T> mc(c, m, n);
    if (trans_a && trans_b) {
        if (accumulate)
            mc.noalias() += ma.transpose() * mb.transpose();
        else
            mc.noalias() = ma.transpose() * mb.transpose();
    } else if (trans_a) {
        if (accumulate)
            mc.noalias() += ma.transpose() * mb;
        else
            mc.noalias() = ma.transpose() * mb;
    } else if (trans_b) {
        if (accumulate)
            mc.noalias() += ma * mb.transpose();
        else
            mc.noalias() = ma * mb.transpose();
    } else {
        if (accumulate)
            mc.noalias() += ma * mb;
        else
            mc.noalias() = ma * mb;
    }
}

}  // namespace raygrid::nn
