// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/nn/ops.hpp"

#include <cmath>

#include "raygrid/nn/gemm.hpp"
#include "raygrid/nn/parallel.hpp"

namespace raygrid::nn::ops {

namespace {

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
    for (int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

}  // namespace

// ---- elementwise and linear algebra ----

template <typename T>
int add(Tape<T>& tape, int a, int b) {
    detail::check(tape.val(a).shape == tape.val(b).shape, "add: shape mismatch");
    Tensor<T> out = tape.val(a);
    const Tensor<T>& vb = tape.val(b);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
    return tape.push(std::move(out), [a, b, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        accumulate(t.grad(a), g);
        accumulate(t.grad(b), g);
    });
}

template <typename T>
int add_const(Tape<T>& tape, int x, const Tensor<T>& c) {
    detail::check(tape.val(x).shape == c.shape, "add_const: shape mismatch");
    Tensor<T> out = tape.val(x);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += c[i];
    return tape.push(std::move(out), [x, self = tape.size()](Tape<T>& t) {
        accumulate(t.grad(x), t.grad(self));
    });
}

template <typename T>
int mul_const(Tape<T>& tape, int x, const Tensor<T>& c) {
    detail::check(tape.val(x).shape == c.shape, "mul_const: shape mismatch");
    Tensor<T> out = tape.val(x);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= c[i];
    return tape.push(std::move(out), [x, c, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        Tensor<T>& dx = t.grad(x);
        for (int64_t i = 0; i < g.numel(); ++i) dx[i] += c[i] * g[i];
    });
}

template <typename T>
int scale(Tape<T>& tape, int x, double factor) {
    Tensor<T> out = tape.val(x);
    const T f = static_cast<T>(factor);
    for (auto& v : out.data) v *= f;
    return tape.push(std::move(out), [x, f, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        Tensor<T>& dx = t.grad(x);
        for (int64_t i = 0; i < g.numel(); ++i) dx[i] += f * g[i];
    });
}

template <typename T>
int relu(Tape<T>& tape, int x) {
    Tensor<T> out = tape.val(x);
    for (auto& v : out.data) v = std::max(v, T(0));
    return tape.push(std::move(out), [x, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        const Tensor<T>& vx = t.val(x);
        Tensor<T>& dx = t.grad(x);
        for (int64_t i = 0; i < g.numel(); ++i)
            if (vx[i] > T(0)) dx[i] += g[i];
    });
}

template <typename T>
int sigmoid(Tape<T>& tape, int x) {
    Tensor<T> out = tape.val(x);
    for (auto& v : out.data) v = T(1) / (T(1) + std::exp(-v));
    return tape.push(std::move(out), [x, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        const Tensor<T>& y = t.val(self);
        Tensor<T>& dx = t.grad(x);
        for (int64_t i = 0; i < g.numel(); ++i)
            dx[i] += g[i] * y[i] * (T(1) - y[i]);
    });
}

template <typename T>
int matmul(Tape<T>& tape, int x, int w) {
    const Tensor<T>& vx = tape.val(x);
    const Tensor<T>& vw = tape.val(w);
    detail::check(vx.rank() == 2 && vw.rank() == 2 && vx.dim(1) == vw.dim(0),
                  "matmul: incompatible shapes");
    const int64_t r = vx.dim(0), c = vx.dim(1), d = vw.dim(1);
    Tensor<T> out({r, d});
    gemm(vx.ptr(), vw.ptr(), out.ptr(), r, c, d);
    return tape.push(std::move(out), [x, w, r, c, d, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        gemm(g.ptr(), t.val(w).ptr(), t.grad(x).ptr(), r, d, c, false, true, true);
        gemm(t.val(x).ptr(), g.ptr(), t.grad(w).ptr(), c, r, d, true, false, true);
    });
}

template <typename T>
int add_bias(Tape<T>& tape, int x, int b) {
    const Tensor<T>& vx = tape.val(x);
    const Tensor<T>& vb = tape.val(b);
    detail::check(vb.rank() == 1 && vx.rank() >= 1 &&
                      vx.dim(vx.rank() - 1) == vb.dim(0),
                  "add_bias: bias must match the last axis");
    const int64_t c = vb.dim(0);
    const int64_t rows = vx.numel() / c;
    Tensor<T> out = vx;
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < c; ++j) out[r * c + j] += vb[j];
    return tape.push(std::move(out), [x, b, rows, c, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        accumulate(t.grad(x), g);
        Tensor<T>& db = t.grad(b);
        parallel_for(c, [&](int64_t j) {
            T acc = T(0);
            for (int64_t r = 0; r < rows; ++r) acc += g[r * c + j];
            db[j] += acc;
        });
    });
}

template <typename T>
int layer_norm(Tape<T>& tape, int x, int gamma, int beta, double eps) {
    const Tensor<T>& vx = tape.val(x);
    const Tensor<T>& vg = tape.val(gamma);
    const Tensor<T>& vb = tape.val(beta);
    detail::check(vx.rank() >= 1, "layer_norm: rank must be >= 1");
    const int64_t c = vx.dim(vx.rank() - 1);
    detail::check(vg.shape == std::vector<int64_t>{c} && vb.shape == vg.shape,
                  "layer_norm: gamma/beta must be [C]");
    const int64_t rows = vx.numel() / c;
    Tensor<T> out(vx.shape);
    auto stats = std::make_shared<Tensor<T>>(std::vector<int64_t>{rows, 2});
    parallel_for(rows, [&](int64_t r) {
        const T* xr = vx.ptr() + r * c;
        T mean = T(0);
        for (int64_t j = 0; j < c; ++j) mean += xr[j];
        mean /= static_cast<T>(c);
        T var = T(0);
        for (int64_t j = 0; j < c; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<T>(c);
        const T rstd = T(1) / std::sqrt(var + static_cast<T>(eps));
        (*stats)[r * 2] = mean;
        (*stats)[r * 2 + 1] = rstd;
        T* yr = out.ptr() + r * c;
        for (int64_t j = 0; j < c; ++j)
            yr[j] = (xr[j] - mean) * rstd * vg[j] + vb[j];
    });
    return tape.push(std::move(out),
                     [x, gamma, beta, rows, c, stats, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        const Tensor<T>& vx2 = t.val(x);
        const Tensor<T>& vg2 = t.val(gamma);
        Tensor<T>& dx = t.grad(x);
        parallel_for(rows, [&](int64_t r) {
            const T mean = (*stats)[r * 2];
            const T rstd = (*stats)[r * 2 + 1];
            const T* xr = vx2.ptr() + r * c;
            const T* gr = g.ptr() + r * c;
            T mean_dxhat = T(0), mean_dxhat_xhat = T(0);
            for (int64_t j = 0; j < c; ++j) {
                const T xhat = (xr[j] - mean) * rstd;
                const T dxhat = gr[j] * vg2[j];
                mean_dxhat += dxhat;
                mean_dxhat_xhat += dxhat * xhat;
            }
            mean_dxhat /= static_cast<T>(c);
            mean_dxhat_xhat /= static_cast<T>(c);
            T* dxr = dx.ptr() + r * c;
            for (int64_t j = 0; j < c; ++j) {
                const T xhat = (xr[j] - mean) * rstd;
                const T dxhat = gr[j] * vg2[j];
                dxr[j] += rstd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
            }
        });
        Tensor<T>& dg = t.grad(gamma);
        Tensor<T>& db = t.grad(beta);
        parallel_for(c, [&](int64_t j) {
            T accg = T(0), accb = T(0);
            for (int64_t r = 0; r < rows; ++r) {
                const T xhat = (vx2[r * c + j] - (*stats)[r * 2]) * (*stats)[r * 2 + 1];
                accg += g[r * c + j] * xhat;
                accb += g[r * c + j];
            }
            dg[j] += accg;
            db[j] += accb;
        });
    });
}

template <typename T>
int reshape(Tape<T>& tape, int x, std::vector<int64_t> shape) {
    Tensor<T> out = tape.val(x).reshaped(std::move(shape));
    return tape.push(std::move(out), [x, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        Tensor<T>& dx = t.grad(x);
        for (int64_t i = 0; i < g.numel(); ++i) dx[i] += g[i];
    });
}

template <typename T>
int gather_rows(Tape<T>& tape, int x, std::vector<int64_t> indices) {
    const Tensor<T>& vx = tape.val(x);
    detail::check(vx.rank() == 2, "gather_rows: input must be [R, C]");
    const int64_t c = vx.dim(1);
    for (int64_t idx : indices)
        detail::check(idx >= 0 && idx < vx.dim(0), "gather_rows: index out of range");
    Tensor<T> out({static_cast<int64_t>(indices.size()), c});
    for (size_t k = 0; k < indices.size(); ++k)
        std::copy_n(vx.ptr() + indices[k] * c, c, out.ptr() + static_cast<int64_t>(k) * c);
    return tape.push(std::move(out),
                     [x, c, idx = std::move(indices), self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        Tensor<T>& dx = t.grad(x);
        // Indices may repeat; serial accumulation keeps this deterministic.
        for (size_t k = 0; k < idx.size(); ++k)
            for (int64_t j = 0; j < c; ++j)
                dx[idx[k] * c + j] += g[static_cast<int64_t>(k) * c + j];
    });
}

template <typename T>
int weighted_sum(Tape<T>& tape, const std::vector<int>& xs,
                 const std::vector<double>& coeffs) {
    detail::check(xs.size() == coeffs.size() && !xs.empty(),
                  "weighted_sum: need matching ids and coefficients");
    T acc = T(0);
    for (size_t i = 0; i < xs.size(); ++i) {
        detail::check(tape.val(xs[i]).numel() == 1, "weighted_sum: scalars only");
        acc += static_cast<T>(coeffs[i]) * tape.val(xs[i])[0];
    }
    return tape.push(Tensor<T>::scalar(acc),
                     [xs, coeffs, self = tape.size()](Tape<T>& t) {
        const T g = t.grad(self)[0];
        for (size_t i = 0; i < xs.size(); ++i)
            t.grad(xs[i])[0] += static_cast<T>(coeffs[i]) * g;
    });
}

// ---- convolutions ----

namespace {

struct ConvGeom {
    int rank = 0;
    int64_t batch = 0, ci = 0, co = 0;
    std::array<int64_t, 3> in = {1, 1, 1}, out = {1, 1, 1};
    int64_t prod_in = 1, prod_out = 1, prod_k = 1;

    int64_t k_of(const ConvSpec& s, int a) const { return s.kernel[static_cast<size_t>(a)]; }
};

template <typename T>
ConvGeom conv_geom(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                   const ConvSpec& spec, bool transposed) {
    detail::check(spec.rank == 2 || spec.rank == 3, "conv: rank must be 2 or 3");
    ConvGeom g;
    g.rank = spec.rank;
    detail::check(x.rank() == spec.rank + 2, "conv: input rank mismatch");
    detail::check(w.rank() == spec.rank + 2, "conv: weight rank mismatch");
    g.batch = x.dim(0);
    g.ci = x.dim(x.rank() - 1);
    g.co = w.dim(0);
    detail::check(w.dim(w.rank() - 1) == g.ci, "conv: weight channel mismatch");
    detail::check(b.shape == std::vector<int64_t>{g.co}, "conv: bias must be [Co]");
    for (int a = 0; a < spec.rank; ++a) {
        g.in[static_cast<size_t>(a)] = x.dim(1 + a);
        detail::check(w.dim(1 + a) == spec.kernel[static_cast<size_t>(a)],
                      "conv: weight kernel mismatch");
        const int64_t k = spec.kernel[static_cast<size_t>(a)];
        const int64_t s = spec.stride[static_cast<size_t>(a)];
        const int64_t p = spec.pad[static_cast<size_t>(a)];
        detail::check(k > 0 && s > 0 && p >= 0, "conv: bad kernel/stride/pad");
        int64_t out;
        if (transposed) {
            out = (g.in[static_cast<size_t>(a)] - 1) * s - 2 * p + k;
        } else {
            out = (g.in[static_cast<size_t>(a)] + 2 * p - k) / s + 1;
        }
        detail::check(out >= 1, "conv: output size would be empty");
        g.out[static_cast<size_t>(a)] = out;
        g.prod_in *= g.in[static_cast<size_t>(a)];
        g.prod_out *= out;
        g.prod_k *= k;
    }
    return g;
}

/// Decodes a flat spatial position (row-major over `dims`) into coords.
inline void decode_pos(int64_t flat, const std::array<int64_t, 3>& dims, int rank,
                       std::array<int64_t, 3>& coord) {
    for (int a = rank - 1; a >= 0; --a) {
        coord[static_cast<size_t>(a)] = flat % dims[static_cast<size_t>(a)];
        flat /= dims[static_cast<size_t>(a)];
    }
}

inline int64_t encode_pos(const std::array<int64_t, 3>& coord,
                          const std::array<int64_t, 3>& dims, int rank) {
    int64_t flat = 0;
    for (int a = 0; a < rank; ++a)
        flat = flat * dims[static_cast<size_t>(a)] + coord[static_cast<size_t>(a)];
    return flat;
}

/// col[row, t*Ci + ci] holds the input tap values for each output position.
template <typename T>
void im2col(const T* x, const ConvGeom& g, const ConvSpec& spec, T* col) {
    const int64_t k_ci = g.prod_k * g.ci;
    parallel_for(g.batch * g.prod_out, [&](int64_t row) {
        const int64_t n = row / g.prod_out;
        std::array<int64_t, 3> o;
        decode_pos(row % g.prod_out, g.out, g.rank, o);
        T* dst = col + row * k_ci;
        std::array<int64_t, 3> tap;
        for (int64_t t = 0; t < g.prod_k; ++t) {
            std::array<int64_t, 3> kd;
            for (int a = 0; a < g.rank; ++a) kd[static_cast<size_t>(a)] = spec.kernel[static_cast<size_t>(a)];
            decode_pos(t, kd, g.rank, tap);
            bool in_range = true;
            std::array<int64_t, 3> i{};
            for (int a = 0; a < g.rank; ++a) {
                i[static_cast<size_t>(a)] = o[static_cast<size_t>(a)] * spec.stride[static_cast<size_t>(a)] -
                                            spec.pad[static_cast<size_t>(a)] + tap[static_cast<size_t>(a)];
                if (i[static_cast<size_t>(a)] < 0 || i[static_cast<size_t>(a)] >= g.in[static_cast<size_t>(a)]) {
                    in_range = false;
                    break;
                }
            }
            if (in_range) {
                const int64_t src = (n * g.prod_in + encode_pos(i, g.in, g.rank)) * g.ci;
                std::copy_n(x + src, g.ci, dst + t * g.ci);
            } else {
                std::fill_n(dst + t * g.ci, g.ci, T(0));
            }
        }
    });
}

/// Input position for output position o and tap t; returns -1 if out of range.
inline int64_t tap_input_pos(const std::array<int64_t, 3>& o,
                             const std::array<int64_t, 3>& tap, const ConvGeom& g,
                             const ConvSpec& spec) {
    std::array<int64_t, 3> i{};
    for (int a = 0; a < g.rank; ++a) {
        i[static_cast<size_t>(a)] = o[static_cast<size_t>(a)] * spec.stride[static_cast<size_t>(a)] -
                                    spec.pad[static_cast<size_t>(a)] + tap[static_cast<size_t>(a)];
        if (i[static_cast<size_t>(a)] < 0 || i[static_cast<size_t>(a)] >= g.in[static_cast<size_t>(a)]) return -1;
    }
    return encode_pos(i, g.in, g.rank);
}

/// Output position reached from input position i through tap t of a
/// transposed convolution; returns -1 if out of range.
inline int64_t tap_output_pos(const std::array<int64_t, 3>& i,
                              const std::array<int64_t, 3>& tap, const ConvGeom& g,
                              const ConvSpec& spec) {
    std::array<int64_t, 3> o{};
    for (int a = 0; a < g.rank; ++a) {
        o[static_cast<size_t>(a)] = i[static_cast<size_t>(a)] * spec.stride[static_cast<size_t>(a)] -
                                    spec.pad[static_cast<size_t>(a)] + tap[static_cast<size_t>(a)];
        if (o[static_cast<size_t>(a)] < 0 || o[static_cast<size_t>(a)] >= g.out[static_cast<size_t>(a)]) return -1;
    }
    return encode_pos(o, g.out, g.rank);
}

template <typename T>
void slice_tap(const Tensor<T>& w, const ConvGeom& g, int64_t t, Tensor<T>& w_t) {
    // w is [Co, taps, Ci] flattened; extract [Co, Ci] for one tap.
    for (int64_t co = 0; co < g.co; ++co)
        std::copy_n(w.ptr() + (co * g.prod_k + t) * g.ci, g.ci, w_t.ptr() + co * g.ci);
}

template <typename T>
std::vector<int64_t> conv_out_shape(const ConvGeom& g, bool transposed) {
    std::vector<int64_t> shape;
    shape.push_back(g.batch);
    for (int a = 0; a < g.rank; ++a)
        shape.push_back(transposed ? g.out[static_cast<size_t>(a)] : g.out[static_cast<size_t>(a)]);
    shape.push_back(g.co);
    return shape;
}

}  // namespace

template <typename T>
int conv_nd(Tape<T>& tape, int x, int w, int b, const ConvSpec& spec) {
    const ConvGeom g = conv_geom(tape.val(x), tape.val(w), tape.val(b), spec, false);
    const int64_t rows = g.batch * g.prod_out;
    const int64_t k_ci = g.prod_k * g.ci;
    Tensor<T> col({rows, k_ci});
    im2col(tape.val(x).ptr(), g, spec, col.ptr());
    Tensor<T> out(conv_out_shape<T>(g, false));
    gemm(col.ptr(), tape.val(w).ptr(), out.ptr(), rows, k_ci, g.co, false, true);
    const Tensor<T>& vb = tape.val(b);
    parallel_for(rows, [&](int64_t r) {
        T* yr = out.ptr() + r * g.co;
        for (int64_t co = 0; co < g.co; ++co) yr[co] += vb[co];
    });
    return tape.push(std::move(out), [x, w, b, g, spec, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& gy = t.grad(self);
        const int64_t rows = g.batch * g.prod_out;
        const int64_t k_ci = g.prod_k * g.ci;
        // dW from a recomputed im2col buffer.
        Tensor<T> col({rows, k_ci});
        im2col(t.val(x).ptr(), g, spec, col.ptr());
        gemm(gy.ptr(), col.ptr(), t.grad(w).ptr(), g.co, rows, k_ci, true, false, true);
        // db.
        Tensor<T>& db = t.grad(b);
        parallel_for(g.co, [&](int64_t co) {
            T acc = T(0);
            for (int64_t r = 0; r < rows; ++r) acc += gy[r * g.co + co];
            db[co] += acc;
        });
        // dX: one gemm per tap, then a scatter that is injective per tap.
        Tensor<T>& dx = t.grad(x);
        Tensor<T> w_t({g.co, g.ci});
        Tensor<T> gtap({rows, g.ci});
        std::array<int64_t, 3> kd;
        for (int a = 0; a < g.rank; ++a) kd[static_cast<size_t>(a)] = spec.kernel[static_cast<size_t>(a)];
        for (int64_t tap = 0; tap < g.prod_k; ++tap) {
            slice_tap(t.val(w), g, tap, w_t);
            gemm(gy.ptr(), w_t.ptr(), gtap.ptr(), rows, g.co, g.ci);
            std::array<int64_t, 3> tc;
            decode_pos(tap, kd, g.rank, tc);
            parallel_for(rows, [&](int64_t r) {
                const int64_t n = r / g.prod_out;
                std::array<int64_t, 3> o;
                decode_pos(r % g.prod_out, g.out, g.rank, o);
                const int64_t ipos = tap_input_pos(o, tc, g, spec);
                if (ipos < 0) return;
                T* dst = dx.ptr() + (n * g.prod_in + ipos) * g.ci;
                const T* src = gtap.ptr() + r * g.ci;
                for (int64_t ci = 0; ci < g.ci; ++ci) dst[ci] += src[ci];
            });
        }
    });
}

template <typename T>
int conv_transpose_nd(Tape<T>& tape, int x, int w, int b, const ConvSpec& spec) {
    const ConvGeom g = conv_geom(tape.val(x), tape.val(w), tape.val(b), spec, true);
    const int64_t in_rows = g.batch * g.prod_in;
    const int64_t out_rows = g.batch * g.prod_out;
    Tensor<T> out(conv_out_shape<T>(g, true));
    const Tensor<T>& vb = tape.val(b);
    parallel_for(out_rows, [&](int64_t r) {
        T* yr = out.ptr() + r * g.co;
        for (int64_t co = 0; co < g.co; ++co) yr[co] = vb[co];
    });
    Tensor<T> w_t({g.co, g.ci});
    Tensor<T> gtap({in_rows, g.co});
    std::array<int64_t, 3> kd;
    for (int a = 0; a < g.rank; ++a) kd[static_cast<size_t>(a)] = spec.kernel[static_cast<size_t>(a)];
    for (int64_t tap = 0; tap < g.prod_k; ++tap) {
        slice_tap(tape.val(w), g, tap, w_t);
        gemm(tape.val(x).ptr(), w_t.ptr(), gtap.ptr(), in_rows, g.ci, g.co, false,
             true);
        std::array<int64_t, 3> tc;
        decode_pos(tap, kd, g.rank, tc);
        parallel_for(in_rows, [&](int64_t r) {
            const int64_t n = r / g.prod_in;
            std::array<int64_t, 3> i;
            decode_pos(r % g.prod_in, g.in, g.rank, i);
            const int64_t opos = tap_output_pos(i, tc, g, spec);
            if (opos < 0) return;
            T* dst = out.ptr() + (n * g.prod_out + opos) * g.co;
            const T* src = gtap.ptr() + r * g.co;
            for (int64_t co = 0; co < g.co; ++co) dst[co] += src[co];
        });
    }
    return tape.push(std::move(out), [x, w, b, g, spec, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& gy = t.grad(self);
        const int64_t in_rows = g.batch * g.prod_in;
        const int64_t out_rows = g.batch * g.prod_out;
        Tensor<T>& db = t.grad(b);
        parallel_for(g.co, [&](int64_t co) {
            T acc = T(0);
            for (int64_t r = 0; r < out_rows; ++r) acc += gy[r * g.co + co];
            db[co] += acc;
        });
        Tensor<T> w_t({g.co, g.ci});
        Tensor<T> gathered({in_rows, g.co});
        std::array<int64_t, 3> kd;
        for (int a = 0; a < g.rank; ++a) kd[static_cast<size_t>(a)] = spec.kernel[static_cast<size_t>(a)];
        for (int64_t tap = 0; tap < g.prod_k; ++tap) {
            std::array<int64_t, 3> tc;
            decode_pos(tap, kd, g.rank, tc);
            // Gather output grads reached through this tap.
            parallel_for(in_rows, [&](int64_t r) {
                const int64_t n = r / g.prod_in;
                std::array<int64_t, 3> i;
                decode_pos(r % g.prod_in, g.in, g.rank, i);
                const int64_t opos = tap_output_pos(i, tc, g, spec);
                T* dst = gathered.ptr() + r * g.co;
                if (opos < 0) {
                    std::fill_n(dst, g.co, T(0));
                } else {
                    std::copy_n(gy.ptr() + (n * g.prod_out + opos) * g.co, g.co, dst);
                }
            });
            slice_tap(t.val(w), g, tap, w_t);
            // dX += gathered @ W_t.
            gemm(gathered.ptr(), w_t.ptr(), t.grad(x).ptr(), in_rows, g.co, g.ci,
                 false, false, true);
            // dW_t += gathered^T @ x, written into the tap slice.
            Tensor<T> dw_t({g.co, g.ci});
            gemm(gathered.ptr(), t.val(x).ptr(), dw_t.ptr(), g.co, in_rows, g.ci,
                 true, false, false);
            Tensor<T>& dw = t.grad(w);
            for (int64_t co = 0; co < g.co; ++co)
                for (int64_t ci = 0; ci < g.ci; ++ci)
                    dw[(co * g.prod_k + tap) * g.ci + ci] += dw_t[co * g.ci + ci];
        }
    });
}

// ---- attention ----

template <typename T>
int sparse_mha(Tape<T>& tape, int target, int source,
               std::shared_ptr<const sparse::SparseMask> mask,
               const AttentionVars<T>& vars) {
    detail::check(mask != nullptr, "sparse_mha: mask is null");
    sparse::AttentionParams<T> params;
    params.d_model = static_cast<int>(tape.val(target).dim(1));
    params.n_heads = vars.n_heads;
    params.d_head = vars.d_head;
    params.wq = tape.val(vars.wq);
    params.wk = tape.val(vars.wk);
    params.wv = tape.val(vars.wv);
    params.wo = tape.val(vars.wo);
    auto cache = std::make_shared<sparse::AttentionCache<T>>();
    Tensor<T> out = sparse::sparse_mha_forward(tape.val(target), tape.val(source),
                                               *mask, params, cache.get());
    return tape.push(std::move(out),
                     [target, source, mask, vars, params = std::move(params), cache,
                      self = tape.size()](Tape<T>& t) {
        const auto grads = sparse::sparse_mha_backward(*cache, params, t.grad(self));
        accumulate(t.grad(target), grads.d_target);
        accumulate(t.grad(source), grads.d_source);
        accumulate(t.grad(vars.wq), grads.d_wq);
        accumulate(t.grad(vars.wk), grads.d_wk);
        accumulate(t.grad(vars.wv), grads.d_wv);
        accumulate(t.grad(vars.wo), grads.d_wo);
    });
}

template <typename T>
int unproject_mean(Tape<T>& tape, int pixels,
                   std::shared_ptr<const sparse::SparseMask> mask) {
    detail::check(mask != nullptr, "unproject_mean: mask is null");
    mask->validate();
    const Tensor<T>& vp = tape.val(pixels);
    detail::check(vp.rank() == 2 && vp.dim(0) == mask->n_cols,
                  "unproject_mean: pixel rows must match mask columns");
    const int64_t c = vp.dim(1);
    Tensor<T> out({mask->n_rows, c});
    parallel_for(mask->n_rows, [&](int64_t v) {
        const int64_t e0 = mask->row_offsets[static_cast<size_t>(v)];
        const int64_t e1 = mask->row_offsets[static_cast<size_t>(v) + 1];
        if (e0 == e1) return;
        T* dst = out.ptr() + v * c;
        for (int64_t e = e0; e < e1; ++e) {
            const T* src =
                vp.ptr() + static_cast<int64_t>(mask->col_index[static_cast<size_t>(e)]) * c;
            for (int64_t j = 0; j < c; ++j) dst[j] += src[j];
        }
        const T inv = T(1) / static_cast<T>(e1 - e0);
        for (int64_t j = 0; j < c; ++j) dst[j] *= inv;
    });
    return tape.push(std::move(out), [pixels, mask, c, self = tape.size()](Tape<T>& t) {
        const Tensor<T>& g = t.grad(self);
        Tensor<T>& dp = t.grad(pixels);
        parallel_for(mask->n_cols, [&](int64_t p) {
            const int64_t s0 = mask->colT_offsets[static_cast<size_t>(p)];
            const int64_t s1 = mask->colT_offsets[static_cast<size_t>(p) + 1];
            T* dst = dp.ptr() + p * c;
            for (int64_t s = s0; s < s1; ++s) {
                const int64_t v = mask->rowT_index[static_cast<size_t>(s)];
                const int64_t deg = mask->row_offsets[static_cast<size_t>(v) + 1] -
                                    mask->row_offsets[static_cast<size_t>(v)];
                const T inv = T(1) / static_cast<T>(deg);
                const T* src = g.ptr() + v * c;
                for (int64_t j = 0; j < c; ++j) dst[j] += inv * src[j];
            }
        });
    });
}

// ---- losses ----

template <typename T>
int softmax_ce(Tape<T>& tape, int logits, std::vector<int> targets) {
    const Tensor<T>& vx = tape.val(logits);
    detail::check(vx.rank() == 2, "softmax_ce: logits must be [R, K]");
    const int64_t r = vx.dim(0), k = vx.dim(1);
    detail::check(static_cast<int64_t>(targets.size()) == r,
                  "softmax_ce: one target per row");
    for (int tc : targets) detail::check(tc >= 0 && tc < k, "softmax_ce: target out of range");
    auto probs = std::make_shared<Tensor<T>>(vx.shape);
    T loss = T(0);
    for (int64_t i = 0; i < r; ++i) {
        const T* xr = vx.ptr() + i * k;
        T* pr = probs->ptr() + i * k;
        T mx = xr[0];
        for (int64_t j = 1; j < k; ++j) mx = std::max(mx, xr[j]);
        T denom = T(0);
        for (int64_t j = 0; j < k; ++j) {
            pr[j] = std::exp(xr[j] - mx);
            denom += pr[j];
        }
        for (int64_t j = 0; j < k; ++j) pr[j] /= denom;
        loss -= std::log(pr[targets[static_cast<size_t>(i)]]);
    }
    loss /= static_cast<T>(r);
    return tape.push(Tensor<T>::scalar(loss),
                     [logits, probs, targets = std::move(targets), r, k,
                      self = tape.size()](Tape<T>& t) {
        const T g = t.grad(self)[0] / static_cast<T>(r);
        Tensor<T>& dx = t.grad(logits);
        for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < k; ++j) {
                const T onehot = j == targets[static_cast<size_t>(i)] ? T(1) : T(0);
                dx[i * k + j] += g * ((*probs)[i * k + j] - onehot);
            }
    });
}

template <typename T>
int bce_logits(Tape<T>& tape, int logits, Tensor<T> targets) {
    const Tensor<T>& vx = tape.val(logits);
    detail::check(vx.shape == targets.shape, "bce_logits: shape mismatch");
    detail::check(vx.numel() > 0, "bce_logits: empty input");
    const int64_t n = vx.numel();
    T loss = T(0);
    for (int64_t i = 0; i < n; ++i) {
        const T x = vx[i];
        const T t = targets[i];
        loss += std::max(x, T(0)) - x * t + std::log1p(std::exp(-std::abs(x)));
    }
    loss /= static_cast<T>(n);
    return tape.push(Tensor<T>::scalar(loss),
                     [logits, targets = std::move(targets), n,
                      self = tape.size()](Tape<T>& t) {
        const T g = t.grad(self)[0] / static_cast<T>(n);
        const Tensor<T>& vx2 = t.val(logits);
        Tensor<T>& dx = t.grad(logits);
        for (int64_t i = 0; i < n; ++i) {
            const T sig = T(1) / (T(1) + std::exp(-vx2[i]));
            dx[i] += g * (sig - targets[i]);
        }
    });
}

namespace {

template <typename T>
int smooth_l1_impl(Tape<T>& tape, int pred, Tensor<T> target, double beta,
                   bool wrap) {
    const Tensor<T>& vx = tape.val(pred);
    detail::check(vx.shape == target.shape, "smooth_l1: shape mismatch");
    detail::check(beta > 0.0, "smooth_l1: beta must be positive");
    const int64_t n = vx.numel();
    const T b = static_cast<T>(beta);
    T loss = T(0);
    for (int64_t i = 0; i < n; ++i) {
        T d = vx[i] - target[i];
        if (wrap) d = static_cast<T>(wrap_angle(static_cast<double>(d)));
        const T ad = std::abs(d);
        loss += ad <= b ? T(0.5) * d * d / b : ad - T(0.5) * b;
    }
    return tape.push(Tensor<T>::scalar(loss),
                     [pred, target = std::move(target), b, wrap, n,
                      self = tape.size()](Tape<T>& t) {
        const T g = t.grad(self)[0];
        const Tensor<T>& vx2 = t.val(pred);
        Tensor<T>& dx = t.grad(pred);
        for (int64_t i = 0; i < n; ++i) {
            T d = vx2[i] - target[i];
            if (wrap) d = static_cast<T>(wrap_angle(static_cast<double>(d)));
            const T slope = d >= b ? T(1) : d <= -b ? T(-1) : d / b;
            dx[i] += g * slope;
        }
    });
}

}  // namespace

template <typename T>
int huber_sum(Tape<T>& tape, int pred, Tensor<T> target, double beta) {
    return smooth_l1_impl(tape, pred, std::move(target), beta, false);
}

template <typename T>
int yaw_huber_sum(Tape<T>& tape, int pred, Tensor<T> target, double beta) {
    return smooth_l1_impl(tape, pred, std::move(target), beta, true);
}

template <typename T>
int l1_sum(Tape<T>& tape, int pred, Tensor<T> target) {
    const Tensor<T>& vx = tape.val(pred);
    detail::check(vx.shape == target.shape, "l1_sum: shape mismatch");
    const int64_t n = vx.numel();
    T loss = T(0);
    for (int64_t i = 0; i < n; ++i) loss += std::abs(vx[i] - target[i]);
    return tape.push(Tensor<T>::scalar(loss),
                     [pred, target = std::move(target), n, self = tape.size()](Tape<T>& t) {
        const T g = t.grad(self)[0];
        const Tensor<T>& vx2 = t.val(pred);
        Tensor<T>& dx = t.grad(pred);
        for (int64_t i = 0; i < n; ++i) {
            const T d = vx2[i] - target[i];
            dx[i] += g * (d > T(0) ? T(1) : d < T(0) ? T(-1) : T(0));
        }
    });
}

template <typename T>
int mse_mean(Tape<T>& tape, int pred, Tensor<T> target) {
    const Tensor<T>& vx = tape.val(pred);
    detail::check(vx.shape == target.shape, "mse_mean: shape mismatch");
    detail::check(vx.numel() > 0, "mse_mean: empty input");
    const int64_t n = vx.numel();
    T loss = T(0);
    for (int64_t i = 0; i < n; ++i) {
        const T d = vx[i] - target[i];
        loss += d * d;
    }
    loss /= static_cast<T>(n);
    return tape.push(Tensor<T>::scalar(loss),
                     [pred, target = std::move(target), n, self = tape.size()](Tape<T>& t) {
        const T g = T(2) * t.grad(self)[0] / static_cast<T>(n);
        const Tensor<T>& vx2 = t.val(pred);
        Tensor<T>& dx = t.grad(pred);
        for (int64_t i = 0; i < n; ++i) dx[i] += g * (vx2[i] - target[i]);
    });
}

// ---- explicit instantiations ----

#define RAYGRID_INSTANTIATE_OPS(T)                                                  \
    template int add<T>(Tape<T>&, int, int);                                        \
    template int add_const<T>(Tape<T>&, int, const Tensor<T>&);                     \
    template int mul_const<T>(Tape<T>&, int, const Tensor<T>&);                     \
    template int scale<T>(Tape<T>&, int, double);                                   \
    template int relu<T>(Tape<T>&, int);                                            \
    template int sigmoid<T>(Tape<T>&, int);                                         \
    template int matmul<T>(Tape<T>&, int, int);                                     \
    template int add_bias<T>(Tape<T>&, int, int);                                   \
    template int layer_norm<T>(Tape<T>&, int, int, int, double);                    \
    template int reshape<T>(Tape<T>&, int, std::vector<int64_t>);                   \
    template int gather_rows<T>(Tape<T>&, int, std::vector<int64_t>);               \
    template int weighted_sum<T>(Tape<T>&, const std::vector<int>&,                 \
                                 const std::vector<double>&);                       \
    template int conv_nd<T>(Tape<T>&, int, int, int, const ConvSpec&);              \
    template int conv_transpose_nd<T>(Tape<T>&, int, int, int, const ConvSpec&);    \
    template int sparse_mha<T>(Tape<T>&, int, int,                                  \
                               std::shared_ptr<const sparse::SparseMask>,           \
                               const AttentionVars<T>&);                            \
    template int unproject_mean<T>(Tape<T>&, int,                                   \
                                   std::shared_ptr<const sparse::SparseMask>);      \
    template int softmax_ce<T>(Tape<T>&, int, std::vector<int>);                    \
    template int bce_logits<T>(Tape<T>&, int, Tensor<T>);                           \
    template int huber_sum<T>(Tape<T>&, int, Tensor<T>, double);                    \
    template int yaw_huber_sum<T>(Tape<T>&, int, Tensor<T>, double);                \
    template int l1_sum<T>(Tape<T>&, int, Tensor<T>);                               \
    template int mse_mean<T>(Tape<T>&, int, Tensor<T>);

RAYGRID_INSTANTIATE_OPS(float)
RAYGRID_INSTANTIATE_OPS(double)

#undef RAYGRID_INSTANTIATE_OPS

}  // namespace raygrid::nn::ops
