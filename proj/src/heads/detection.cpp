// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/heads/detection.hpp"

#include <cmath>
#include <memory>

#include "raygrid/backbone/backbone.hpp"
#include "raygrid/heads/hungarian.hpp"
#include "raygrid/sparse/mask.hpp"

namespace raygrid::heads {

namespace ops = nn::ops;

DetectionConfig DetectionConfig::toy() { return {}; }

DetectionConfig DetectionConfig::paper() {
    DetectionConfig c;
    c.n_queries = 64;
    c.n_heads = 8;
    c.shape_dim = 63;
    return c;
}

int DetectionConfig::shape_layers() const {
    int size = 1, layers = 0;
    while (size < shape_dim) {
        size = 2 * size + 1;
        ++layers;
    }
    detail::check(size == shape_dim && layers >= 1,
                  "shape_dim must be 2^(L+1) - 1 for some L >= 1");
    return layers;
}

void DetectionConfig::validate(int d_model) const {
    detail::check(n_queries > 0, "n_queries must be positive");
    detail::check(n_layers > 0, "n_layers must be positive");
    detail::check(n_categories > 0, "n_categories must be positive");
    detail::check(d_model > 0 && d_model % n_heads == 0,
                  "d_model must be a positive multiple of n_heads");
    detail::check(shape_channels >= 8, "shape_channels must be at least 8");
    detail::check(huber_beta_center > 0.0 && huber_beta_yaw > 0.0,
                  "Huber thresholds must be positive");
    shape_layers();
}

namespace {

template <typename T>
int post_ln(Tape<T>& tape, TapeBinding<T>& params, const std::string& prefix, int x,
            int residual, int64_t d) {
    const int sum = ops::add(tape, x, residual);
    const int gamma = params.ones(prefix + ".gamma", {d});
    const int beta = params.zeros(prefix + ".beta", {d});
    return ops::layer_norm(tape, sum, gamma, beta);
}

/// Two-layer prediction head ending in a zero-initialized projection, so the
/// initial output is the bias.
template <typename T>
int mlp_head(Tape<T>& tape, TapeBinding<T>& params, const std::string& prefix, int x,
             int64_t d, int64_t out_dim) {
    const int w1 = params.xavier(prefix + ".w1", {d, d}, d, d);
    const int b1 = params.zeros(prefix + ".b1", {d});
    const int h = ops::relu(tape, ops::add_bias(tape, ops::matmul(tape, x, w1), b1));
    const int w2 = params.zeros(prefix + ".w2", {d, out_dim});
    const int b2 = params.zeros(prefix + ".b2", {out_dim});
    return ops::add_bias(tape, ops::matmul(tape, h, w2), b2);
}

/// Tiles a 3-vector across n rows.
template <typename T>
Tensor<T> tile_rows(const Vec3& v, int64_t n) {
    Tensor<T> t({n, 3});
    for (int64_t r = 0; r < n; ++r)
        for (int64_t c = 0; c < 3; ++c) t[r * 3 + c] = static_cast<T>(v[c]);
    return t;
}

template <typename T>
int shape_head(Tape<T>& tape, TapeBinding<T>& params, int x, int64_t d,
               const DetectionConfig& config) {
    const int64_t c0 = config.shape_channels;
    const int w0 = params.xavier("det.head.shape.w0", {d, c0}, d, c0);
    const int b0 = params.zeros("det.head.shape.b0", {c0});
    int h = ops::add_bias(tape, ops::matmul(tape, x, w0), b0);
    h = ops::reshape(tape, h, {config.n_queries, 1, 1, 1, c0});

    const int layers = config.shape_layers();
    const nn::ConvSpec spec = nn::ConvSpec::make(3, 3, 2, 0);
    for (int i = 0; i < layers; ++i) {
        const int64_t ci = std::max<int64_t>(c0 >> i, 8);
        const int64_t co = i == layers - 1 ? 1 : std::max<int64_t>(c0 >> (i + 1), 8);
        const std::string prefix = "det.head.shape.conv" + std::to_string(i);
        const int b = params.zeros(prefix + ".b", {co});
        const int w = i == layers - 1
                          ? params.zeros(prefix + ".w", {co, 3, 3, 3, ci})
                          : params.xavier(prefix + ".w", {co, 3, 3, 3, ci}, 27 * ci,
                                          27 * co);
        h = ops::conv_transpose_nd(tape, h, w, b, spec);
        if (i < layers - 1) h = ops::relu(tape, h);
    }
    const int64_t s = config.shape_dim;
    return ops::reshape(tape, h, {config.n_queries, s, s, s});
}

}  // namespace

template <typename T>
std::vector<DecoderLayerIds> detr_decode(Tape<T>& tape, TapeBinding<T>& params, int v_n,
                                         const geometry::VoxelGridSpec& grid,
                                         const DetectionConfig& config) {
    const Tensor<T>& voxels = tape.val(v_n);
    detail::check(voxels.rank() == 2, "detr_decode: voxel stream must be [V, d]");
    const int64_t d = voxels.dim(1);
    config.validate(static_cast<int>(d));
    detail::check(voxels.dim(0) == grid.voxel_count(),
                  "detr_decode: voxel stream does not match the grid");
    const int64_t nq = config.n_queries;
    const int64_t k1 = config.n_categories + 1;

    const int posenc = params.normal("det.posenc", {grid.voxel_count(), d}, 0.02);
    const int source = ops::add(tape, v_n, posenc);
    int x = params.normal("det.queries", {nq, d}, 0.02);

    const auto self_mask =
        std::make_shared<const sparse::SparseMask>(sparse::SparseMask::full(nq, nq));
    const auto cross_mask = std::make_shared<const sparse::SparseMask>(
        sparse::SparseMask::full(nq, grid.voxel_count()));

    Tensor<T> class_bias({k1});
    class_bias[k1 - 1] = static_cast<T>(2.0);
    const int cls_w = params.zeros("det.head.class.w", {d, k1});
    const int cls_b = params.tensor("det.head.class.b", std::move(class_bias));
    const Tensor<T> extent_rows = tile_rows<T>(grid.extent(), nq);
    const Tensor<T> origin_rows = tile_rows<T>(grid.origin, nq);

    std::vector<DecoderLayerIds> out;
    for (int layer = 0; layer < config.n_layers; ++layer) {
        const std::string prefix = "det.layer" + std::to_string(layer);
        const auto self_vars = backbone::attention_vars(params, prefix + ".self",
                                                        static_cast<int>(d), config.n_heads);
        x = post_ln(tape, params, prefix + ".ln1",
                    ops::sparse_mha(tape, x, x, self_mask, self_vars), x, d);
        const auto cross_vars = backbone::attention_vars(params, prefix + ".cross",
                                                         static_cast<int>(d), config.n_heads);
        x = post_ln(tape, params, prefix + ".ln2",
                    ops::sparse_mha(tape, x, source, cross_mask, cross_vars), x, d);
        const int f_w1 = params.xavier(prefix + ".ffn.w1", {d, 2 * d}, d, 2 * d);
        const int f_b1 = params.zeros(prefix + ".ffn.b1", {2 * d});
        const int f_w2 = params.xavier(prefix + ".ffn.w2", {2 * d, d}, 2 * d, d);
        const int f_b2 = params.zeros(prefix + ".ffn.b2", {d});
        const int hidden =
            ops::relu(tape, ops::add_bias(tape, ops::matmul(tape, x, f_w1), f_b1));
        const int ffn = ops::add_bias(tape, ops::matmul(tape, hidden, f_w2), f_b2);
        x = post_ln(tape, params, prefix + ".ln3", ffn, x, d);

        DecoderLayerIds ids;
        ids.class_logits = ops::add_bias(tape, ops::matmul(tape, x, cls_w), cls_b);
        const int center_raw = mlp_head(tape, params, "det.head.center", x, d, 3);
        ids.center = ops::add_const(
            tape, ops::mul_const(tape, ops::sigmoid(tape, center_raw), extent_rows),
            origin_rows);
        ids.log_scale = mlp_head(tape, params, "det.head.scale", x, d, 3);
        ids.yaw = mlp_head(tape, params, "det.head.yaw", x, d, 1);
        ids.shape_logits = shape_head(tape, params, x, d, config);
        out.push_back(ids);
    }
    return out;
}

template <typename T>
std::vector<ObjectPrediction> decode_predictions(const Tape<T>& tape,
                                                 const DecoderLayerIds& layer,
                                                 const DetectionConfig& config) {
    const Tensor<T>& cls = tape.val(layer.class_logits);
    const Tensor<T>& center = tape.val(layer.center);
    const Tensor<T>& log_scale = tape.val(layer.log_scale);
    const Tensor<T>& yaw = tape.val(layer.yaw);
    const Tensor<T>& shape = tape.val(layer.shape_logits);
    const int64_t nq = config.n_queries;
    const int64_t k1 = config.n_categories + 1;
    const int64_t s3 = static_cast<int64_t>(config.shape_dim) * config.shape_dim *
                       config.shape_dim;

    std::vector<ObjectPrediction> preds(static_cast<size_t>(nq));
    for (int64_t q = 0; q < nq; ++q) {
        ObjectPrediction& p = preds[static_cast<size_t>(q)];
        p.category_logits.resize(static_cast<size_t>(k1));
        for (int64_t k = 0; k < k1; ++k)
            p.category_logits[static_cast<size_t>(k)] =
                static_cast<double>(cls[q * k1 + k]);
        for (int i = 0; i < 3; ++i) {
            p.pose.center[i] = static_cast<double>(center[q * 3 + i]);
            p.pose.scale[i] = std::exp(static_cast<double>(log_scale[q * 3 + i]));
        }
        p.pose.yaw = wrap_angle(static_cast<double>(yaw[q]));
        p.shape_dim = config.shape_dim;
        p.shape_logits.resize(static_cast<size_t>(s3));
        for (int64_t i = 0; i < s3; ++i)
            p.shape_logits[static_cast<size_t>(i)] = static_cast<float>(shape[q * s3 + i]);
    }
    return preds;
}

double matching_cost(const ObjectPrediction& pred, const ObjectGT& gt,
                     const DetectionConfig& config) {
    detail::check(gt.category >= 0 && gt.category < config.n_categories,
                  "matching_cost: GT category out of range");
    detail::check(gt.pose.scale.minCoeff() > 0.0, "matching_cost: GT scale must be > 0");
    const auto huber = [](double x, double beta) {
        const double a = std::abs(x);
        return a <= beta ? 0.5 * x * x / beta : a - 0.5 * beta;
    };
    double cost = -config.w_class * pred.probability(gt.category);
    for (int i = 0; i < 3; ++i) {
        cost += config.w_center *
                huber(pred.pose.center[i] - gt.pose.center[i], config.huber_beta_center);
        cost += config.w_scale *
                std::abs(std::log(pred.pose.scale[i]) - std::log(gt.pose.scale[i]));
    }
    cost += config.w_yaw *
            huber(wrap_angle(pred.pose.yaw - gt.pose.yaw), config.huber_beta_yaw);
    return cost;
}

template <typename T>
DetectionLoss detection_loss(Tape<T>& tape, const std::vector<DecoderLayerIds>& layers,
                             std::span<const ObjectGT> gts, const DetectionConfig& config) {
    detail::check(!layers.empty(), "detection_loss: no decoder layers");
    const int64_t nq = config.n_queries;
    const int64_t n_gt = static_cast<int64_t>(gts.size());
    detail::check(n_gt <= nq, "detection_loss: more objects than query slots");
    const int64_t s = config.shape_dim;
    const int64_t s3 = s * s * s;
    for (const ObjectGT& gt : gts) {
        detail::check(gt.shape.dims == std::array<int, 3>{static_cast<int>(s),
                                                          static_cast<int>(s),
                                                          static_cast<int>(s)},
                      "detection_loss: GT shape grid does not match shape_dim");
    }

    DetectionLoss result;
    std::vector<int> terms;
    std::vector<double> coeffs;
    const auto push = [&](int id, double coeff, double* logged) {
        terms.push_back(id);
        coeffs.push_back(coeff);
        *logged += coeff * static_cast<double>(tape.val(id)[0]);
    };

    for (const DecoderLayerIds& layer : layers) {
        const auto preds = decode_predictions(tape, layer, config);

        std::vector<int> gt_to_slot;
        if (n_gt > 0) {
            Tensor<double> cost({n_gt, nq});
            for (int64_t g = 0; g < n_gt; ++g)
                for (int64_t q = 0; q < nq; ++q)
                    cost[g * nq + q] =
                        matching_cost(preds[static_cast<size_t>(q)],
                                      gts[static_cast<size_t>(g)], config);
            gt_to_slot = hungarian_match(cost);
        }
        result.n_matched = static_cast<int>(gt_to_slot.size());

        std::vector<int> class_targets(static_cast<size_t>(nq), config.n_categories);
        for (int64_t g = 0; g < n_gt; ++g)
            class_targets[static_cast<size_t>(gt_to_slot[static_cast<size_t>(g)])] =
                gts[static_cast<size_t>(g)].category;
        push(ops::softmax_ce(tape, layer.class_logits, std::move(class_targets)),
             config.w_class, &result.class_term);

        if (n_gt == 0) continue;
        std::vector<int64_t> slots(gt_to_slot.begin(), gt_to_slot.end());
        Tensor<T> t_center({n_gt, 3}), t_log_scale({n_gt, 3}), t_yaw({n_gt, 1});
        Tensor<T> t_shape({n_gt, s3});
        for (int64_t g = 0; g < n_gt; ++g) {
            const ObjectGT& gt = gts[static_cast<size_t>(g)];
            for (int i = 0; i < 3; ++i) {
                t_center[g * 3 + i] = static_cast<T>(gt.pose.center[i]);
                t_log_scale[g * 3 + i] = static_cast<T>(std::log(gt.pose.scale[i]));
            }
            t_yaw[g] = static_cast<T>(gt.pose.yaw);
            for (int64_t i = 0; i < s3; ++i)
                t_shape[g * s3 + i] = static_cast<T>(gt.shape.get(i) ? 1 : 0);
        }
        const double inv_gt = 1.0 / static_cast<double>(n_gt);
        push(ops::huber_sum(tape, ops::gather_rows(tape, layer.center, slots),
                            std::move(t_center), config.huber_beta_center),
             config.w_center * inv_gt, &result.center_term);
        push(ops::l1_sum(tape, ops::gather_rows(tape, layer.log_scale, slots),
                         std::move(t_log_scale)),
             config.w_scale * inv_gt, &result.scale_term);
        push(ops::yaw_huber_sum(tape, ops::gather_rows(tape, layer.yaw, slots),
                                std::move(t_yaw), config.huber_beta_yaw),
             config.w_yaw * inv_gt, &result.yaw_term);
        const int shape_rows =
            ops::gather_rows(tape, ops::reshape(tape, layer.shape_logits, {nq, s3}), slots);
        push(ops::bce_logits(tape, shape_rows, std::move(t_shape)), config.w_shape,
             &result.shape_term);
    }
    result.total = ops::weighted_sum(tape, terms, coeffs);
    return result;
}

#define RAYGRID_INSTANTIATE_DETECTION(T)                                                   \
    template std::vector<DecoderLayerIds> detr_decode<T>(                                  \
        Tape<T>&, TapeBinding<T>&, int, const geometry::VoxelGridSpec&,                    \
        const DetectionConfig&);                                                           \
    template std::vector<ObjectPrediction> decode_predictions<T>(                          \
        const Tape<T>&, const DecoderLayerIds&, const DetectionConfig&);                   \
    template DetectionLoss detection_loss<T>(Tape<T>&,                                     \
                                             const std::vector<DecoderLayerIds>&,          \
                                             std::span<const ObjectGT>,                    \
                                             const DetectionConfig&);

RAYGRID_INSTANTIATE_DETECTION(float)
RAYGRID_INSTANTIATE_DETECTION(double)

#undef RAYGRID_INSTANTIATE_DETECTION

}  // namespace raygrid::heads
