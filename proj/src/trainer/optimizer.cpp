// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/trainer/optimizer.hpp"

#include <cmath>

namespace raygrid::trainer {

template <typename T>
void optimizer_step(nn::ParamStore<T>& params, int64_t step, const TrainConfig& config) {
    config.validate();
    detail::check(step >= 1, "optimizer_step: step is 1-based");
    const double lr = config.learning_rate;
    const double b1 = config.beta1, b2 = config.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (auto& [name, entry] : params.entries()) {
        for (int64_t i = 0; i < entry.value.numel(); ++i) {
            const double g = static_cast<double>(entry.grad[i]);
            const double m = b1 * static_cast<double>(entry.m[i]) + (1.0 - b1) * g;
            const double v = b2 * static_cast<double>(entry.v[i]) + (1.0 - b2) * g * g;
            entry.m[i] = static_cast<T>(m);
            entry.v[i] = static_cast<T>(v);
            const double m_hat = m / bias1;
            const double v_hat = v / bias2;
            const double p = static_cast<double>(entry.value[i]);
            entry.value[i] = static_cast<T>(
                p - lr * (m_hat / (std::sqrt(v_hat) + config.eps) +
                          config.weight_decay * p));
        }
    }
}

template void optimizer_step<float>(nn::ParamStore<float>&, int64_t, const TrainConfig&);
template void optimizer_step<double>(nn::ParamStore<double>&, int64_t,
                                     const TrainConfig&);

}  // namespace raygrid::trainer
