// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/sparse/attention.hpp"

#include <cmath>
#include <limits>

#include "raygrid/nn/gemm.hpp"
#include "raygrid/nn/parallel.hpp"

namespace raygrid::sparse {

template <typename T>
AttentionParams<T> AttentionParams<T>::create(int d_model, int n_heads, int d_head) {
    detail::check(d_model > 0 && n_heads > 0 && d_head > 0,
                  "attention sizes must be positive");
    AttentionParams p;
    p.d_model = d_model;
    p.n_heads = n_heads;
    p.d_head = d_head;
    p.wq = nn::Tensor<T>({d_model, n_heads * d_head});
    p.wk = nn::Tensor<T>({d_model, n_heads * d_head});
    p.wv = nn::Tensor<T>({d_model, n_heads * d_head});
    p.wo = nn::Tensor<T>({n_heads * d_head, d_model});
    return p;
}

template <typename T>
void AttentionParams<T>::validate() const {
    detail::check(d_model > 0 && n_heads > 0 && d_head > 0,
                  "attention sizes must be positive");
    nn::check_shape(wq, {d_model, d_inner()}, "wq");
    nn::check_shape(wk, {d_model, d_inner()}, "wk");
    nn::check_shape(wv, {d_model, d_inner()}, "wv");
    nn::check_shape(wo, {d_inner(), d_model}, "wo");
}

template <typename T>
int64_t AttentionCache<T>::byte_size() const {
    const auto bytes = [](const nn::Tensor<T>& t) {
        return t.numel() * static_cast<int64_t>(sizeof(T));
    };
    return bytes(target) + bytes(source) + bytes(q) + bytes(k) + bytes(v) +
           bytes(weights) + bytes(context);
}

template <typename T>
nn::Tensor<T> sparse_mha_forward(const nn::Tensor<T>& target,
                                 const nn::Tensor<T>& source,
                                 const SparseMask& mask,
                                 const AttentionParams<T>& params,
                                 AttentionCache<T>* cache) {
    params.validate();
    mask.validate();
    nn::check_shape(target, {mask.n_rows, params.d_model}, "attention target");
    nn::check_shape(source, {mask.n_cols, params.d_model}, "attention source");
    nn::check_finite(target, "attention target");
    nn::check_finite(source, "attention source");

    const int64_t rows = mask.n_rows;
    const int64_t cols = mask.n_cols;
    const int h = params.n_heads;
    const int dh = params.d_head;
    const int di = params.d_inner();
    const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    nn::Tensor<T> q({rows, di}), k({cols, di}), v({cols, di});
    nn::gemm(target.ptr(), params.wq.ptr(), q.ptr(), rows, params.d_model, di);
    nn::gemm(source.ptr(), params.wk.ptr(), k.ptr(), cols, params.d_model, di);
    nn::gemm(source.ptr(), params.wv.ptr(), v.ptr(), cols, params.d_model, di);

    nn::Tensor<T> weights({h, mask.nnz()});
    nn::Tensor<T> context({rows, di});

    nn::parallel_for(rows, [&](int64_t r) {
        const int64_t e0 = mask.row_offsets[static_cast<size_t>(r)];
        const int64_t e1 = mask.row_offsets[static_cast<size_t>(r) + 1];
        if (e0 == e1) return;  // empty row, context stays zero
        for (int head = 0; head < h; ++head) {
            const int64_t off = static_cast<int64_t>(head) * dh;
            const T* qr = q.ptr() + r * di + off;
            T* w = weights.ptr() + static_cast<int64_t>(head) * mask.nnz();
            T max_logit = -std::numeric_limits<T>::infinity();
            for (int64_t e = e0; e < e1; ++e) {
                const T* kc = k.ptr() + static_cast<int64_t>(
                                            mask.col_index[static_cast<size_t>(e)]) *
                                            di +
                                        off;
                T dot = T(0);
                for (int d = 0; d < dh; ++d) dot += qr[d] * kc[d];
                w[e] = dot * inv_sqrt;
                max_logit = std::max(max_logit, w[e]);
            }
            T denom = T(0);
            for (int64_t e = e0; e < e1; ++e) {
                w[e] = std::exp(w[e] - max_logit);
                denom += w[e];
            }
            const T inv_denom = T(1) / denom;
            T* ctx = context.ptr() + r * di + off;
            for (int64_t e = e0; e < e1; ++e) {
                w[e] *= inv_denom;
                const T* vc = v.ptr() + static_cast<int64_t>(
                                            mask.col_index[static_cast<size_t>(e)]) *
                                            di +
                                        off;
                const T we = w[e];
                for (int d = 0; d < dh; ++d) ctx[d] += we * vc[d];
            }
        }
    });

    nn::Tensor<T> out({rows, params.d_model});
    nn::gemm(context.ptr(), params.wo.ptr(), out.ptr(), rows, di, params.d_model);

    if (cache) {
        cache->target = target;
        cache->source = source;
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->weights = std::move(weights);
        cache->context = std::move(context);
        cache->mask = &mask;
    }
    return out;
}

template <typename T>
AttentionGrads<T> sparse_mha_backward(const AttentionCache<T>& cache,
                                      const AttentionParams<T>& params,
                                      const nn::Tensor<T>& grad_output) {
    detail::check(cache.mask != nullptr, "attention cache is empty");
    const SparseMask& mask = *cache.mask;
    params.validate();
    nn::check_shape(grad_output, {mask.n_rows, params.d_model}, "grad_output");
    nn::check_finite(grad_output, "grad_output");

    const int64_t rows = mask.n_rows;
    const int64_t cols = mask.n_cols;
    const int h = params.n_heads;
    const int dh = params.d_head;
    const int di = params.d_inner();
    const int dm = params.d_model;
    const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    AttentionGrads<T> g;
    g.d_wo = nn::Tensor<T>({di, dm});
    nn::gemm(cache.context.ptr(), grad_output.ptr(), g.d_wo.ptr(), di, rows, dm,
             /*trans_a=*/true);

    nn::Tensor<T> d_context({rows, di});
    nn::gemm(grad_output.ptr(), params.wo.ptr(), d_context.ptr(), rows, dm, di,
             /*trans_a=*/false, /*trans_b=*/true);

    // d_logit per entry per head, reused for both dQ (row gather) and dK
    // (column gather through the transposed view).
    nn::Tensor<T> d_logit({h, mask.nnz()});
    nn::Tensor<T> d_q({rows, di});

    nn::parallel_for(rows, [&](int64_t r) {
        const int64_t e0 = mask.row_offsets[static_cast<size_t>(r)];
        const int64_t e1 = mask.row_offsets[static_cast<size_t>(r) + 1];
        if (e0 == e1) return;
        for (int head = 0; head < h; ++head) {
            const int64_t off = static_cast<int64_t>(head) * dh;
            const T* w = cache.weights.ptr() + static_cast<int64_t>(head) * mask.nnz();
            T* dl = d_logit.ptr() + static_cast<int64_t>(head) * mask.nnz();
            const T* dctx = d_context.ptr() + r * di + off;
            // dw_e = <dctx, V_col>; softmax backward needs the weighted sum.
            T weighted = T(0);
            for (int64_t e = e0; e < e1; ++e) {
                const T* vc = cache.v.ptr() +
                              static_cast<int64_t>(
                                  mask.col_index[static_cast<size_t>(e)]) *
                                  di +
                              off;
                T dw = T(0);
                for (int d = 0; d < dh; ++d) dw += dctx[d] * vc[d];
                dl[e] = dw;
                weighted += w[e] * dw;
            }
            T* dq = d_q.ptr() + r * di + off;
            for (int64_t e = e0; e < e1; ++e) {
                dl[e] = w[e] * (dl[e] - weighted);
                const T* kc = cache.k.ptr() +
                              static_cast<int64_t>(
                                  mask.col_index[static_cast<size_t>(e)]) *
                                  di +
                              off;
                const T c = dl[e] * inv_sqrt;
                for (int d = 0; d < dh; ++d) dq[d] += c * kc[d];
            }
        }
    });

    nn::Tensor<T> d_k({cols, di});
    nn::Tensor<T> d_v({cols, di});
    nn::parallel_for(cols, [&](int64_t c) {
        const int64_t s0 = mask.colT_offsets[static_cast<size_t>(c)];
        const int64_t s1 = mask.colT_offsets[static_cast<size_t>(c) + 1];
        if (s0 == s1) return;
        for (int head = 0; head < h; ++head) {
            const int64_t off = static_cast<int64_t>(head) * dh;
            const T* w = cache.weights.ptr() + static_cast<int64_t>(head) * mask.nnz();
            const T* dl = d_logit.ptr() + static_cast<int64_t>(head) * mask.nnz();
            T* dk = d_k.ptr() + c * di + off;
            T* dv = d_v.ptr() + c * di + off;
            for (int64_t s = s0; s < s1; ++s) {
                const int64_t e = mask.entryT[static_cast<size_t>(s)];
                const int64_t r = mask.rowT_index[static_cast<size_t>(s)];
                const T* qr = cache.q.ptr() + r * di + off;
                const T* dctx = d_context.ptr() + r * di + off;
                const T cdl = dl[e] * inv_sqrt;
                const T cw = w[e];
                for (int d = 0; d < dh; ++d) {
                    dk[d] += cdl * qr[d];
                    dv[d] += cw * dctx[d];
                }
            }
        }
    });

    g.d_wq = nn::Tensor<T>({dm, di});
    g.d_wk = nn::Tensor<T>({dm, di});
    g.d_wv = nn::Tensor<T>({dm, di});
    nn::gemm(cache.target.ptr(), d_q.ptr(), g.d_wq.ptr(), dm, rows, di, true);
    nn::gemm(cache.source.ptr(), d_k.ptr(), g.d_wk.ptr(), dm, cols, di, true);
    nn::gemm(cache.source.ptr(), d_v.ptr(), g.d_wv.ptr(), dm, cols, di, true);

    g.d_target = nn::Tensor<T>({rows, dm});
    nn::gemm(d_q.ptr(), params.wq.ptr(), g.d_target.ptr(), rows, di, dm, false, true);
    g.d_source = nn::Tensor<T>({cols, dm});
    nn::gemm(d_k.ptr(), params.wk.ptr(), g.d_source.ptr(), cols, di, dm, false, true);
    nn::gemm(d_v.ptr(), params.wv.ptr(), g.d_source.ptr(), cols, di, dm, false, true,
             /*accumulate=*/true);
    return g;
}

template <typename T>
nn::Tensor<T> dense_oracle_forward(const nn::Tensor<T>& target,
                                   const nn::Tensor<T>& source,
                                   const SparseMask& mask,
                                   const AttentionParams<T>& params) {
    params.validate();
    mask.validate();
    nn::check_shape(target, {mask.n_rows, params.d_model}, "attention target");
    nn::check_shape(source, {mask.n_cols, params.d_model}, "attention source");

    const int64_t rows = mask.n_rows;
    const int64_t cols = mask.n_cols;
    const int h = params.n_heads;
    const int dh = params.d_head;
    const int di = params.d_inner();
    const int dm = params.d_model;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    // Plain-loop projections.
    const auto project = [&](const nn::Tensor<T>& x, const nn::Tensor<T>& w) {
        std::vector<std::vector<double>> out(
            static_cast<size_t>(x.dim(0)), std::vector<double>(static_cast<size_t>(di), 0.0));
        for (int64_t i = 0; i < x.dim(0); ++i)
            for (int j = 0; j < di; ++j) {
                double acc = 0.0;
                for (int d = 0; d < dm; ++d)
                    acc += static_cast<double>(x[i * dm + d]) *
                           static_cast<double>(w[static_cast<int64_t>(d) * di + j]);
                out[static_cast<size_t>(i)][static_cast<size_t>(j)] = acc;
            }
        return out;
    };
    const auto q = project(target, params.wq);
    const auto k = project(source, params.wk);
    const auto v = project(source, params.wv);

    // Dense masked score matrix per head.
    nn::Tensor<T> out({rows, dm});
    std::vector<double> scores(static_cast<size_t>(cols));
    std::vector<double> ctx(static_cast<size_t>(di));
    for (int64_t r = 0; r < rows; ++r) {
        std::fill(ctx.begin(), ctx.end(), 0.0);
        // Membership row of the mask.
        std::vector<char> allowed(static_cast<size_t>(cols), 0);
        for (int64_t e = mask.row_offsets[static_cast<size_t>(r)];
             e < mask.row_offsets[static_cast<size_t>(r) + 1]; ++e)
            allowed[static_cast<size_t>(mask.col_index[static_cast<size_t>(e)])] = 1;
        for (int head = 0; head < h; ++head) {
            const int off = head * dh;
            double max_logit = -std::numeric_limits<double>::infinity();
            for (int64_t c = 0; c < cols; ++c) {
                if (!allowed[static_cast<size_t>(c)]) {
                    scores[static_cast<size_t>(c)] =
                        -std::numeric_limits<double>::infinity();
                    continue;
                }
                double dot = 0.0;
                for (int d = 0; d < dh; ++d)
                    dot += q[static_cast<size_t>(r)][static_cast<size_t>(off + d)] *
                           k[static_cast<size_t>(c)][static_cast<size_t>(off + d)];
                scores[static_cast<size_t>(c)] = dot * inv_sqrt;
                max_logit = std::max(max_logit, scores[static_cast<size_t>(c)]);
            }
            if (max_logit == -std::numeric_limits<double>::infinity()) continue;
            double denom = 0.0;
            for (int64_t c = 0; c < cols; ++c) {
                if (!allowed[static_cast<size_t>(c)]) continue;
                scores[static_cast<size_t>(c)] =
                    std::exp(scores[static_cast<size_t>(c)] - max_logit);
                denom += scores[static_cast<size_t>(c)];
            }
            for (int64_t c = 0; c < cols; ++c) {
                if (!allowed[static_cast<size_t>(c)]) continue;
                const double weight = scores[static_cast<size_t>(c)] / denom;
                for (int d = 0; d < dh; ++d)
                    ctx[static_cast<size_t>(off + d)] +=
                        weight * v[static_cast<size_t>(c)][static_cast<size_t>(off + d)];
            }
        }
        for (int j = 0; j < dm; ++j) {
            double acc = 0.0;
            for (int d = 0; d < di; ++d)
                acc += ctx[static_cast<size_t>(d)] *
                       static_cast<double>(params.wo[static_cast<int64_t>(d) * dm + j]);
            out[r * dm + j] = static_cast<T>(acc);
        }
    }
    return out;
}

template struct AttentionParams<float>;
template struct AttentionParams<double>;
template struct AttentionCache<float>;
template struct AttentionCache<double>;

template nn::Tensor<float> sparse_mha_forward<float>(const nn::Tensor<float>&,
                                                     const nn::Tensor<float>&,
                                                     const SparseMask&,
                                                     const AttentionParams<float>&,
                                                     AttentionCache<float>*);
template nn::Tensor<double> sparse_mha_forward<double>(const nn::Tensor<double>&,
                                                       const nn::Tensor<double>&,
                                                       const SparseMask&,
                                                       const AttentionParams<double>&,
                                                       AttentionCache<double>*);
template AttentionGrads<float> sparse_mha_backward<float>(
    const AttentionCache<float>&, const AttentionParams<float>&,
    const nn::Tensor<float>&);
template AttentionGrads<double> sparse_mha_backward<double>(
    const AttentionCache<double>&, const AttentionParams<double>&,
    const nn::Tensor<double>&);
template nn::Tensor<float> dense_oracle_forward<float>(const nn::Tensor<float>&,
                                                       const nn::Tensor<float>&,
                                                       const SparseMask&,
                                                       const AttentionParams<float>&);
template nn::Tensor<double> dense_oracle_forward<double>(
    const nn::Tensor<double>&, const nn::Tensor<double>&, const SparseMask&,
    const AttentionParams<double>&);

}  // namespace raygrid::sparse
