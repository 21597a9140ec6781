// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "raygrid/nn/tensor.hpp"

namespace raygrid::nn {

/// Reverse-mode tape. Ops append a value plus a closure that scatters the
/// output gradient into the input gradients; ids form a topological order, so
/// backward() is a single reverse sweep. Grad buffers are allocated lazily and
/// ops whose output never received a gradient are skipped.
template <typename T>
class Tape {
public:
    using BackFn = std::function<void(Tape&)>;

    int leaf(Tensor<T> value) {
        vals_.push_back(std::move(value));
        grads_.emplace_back();
        backs_.emplace_back();
        return static_cast<int>(vals_.size()) - 1;
    }

    int push(Tensor<T> value, BackFn back) {
        vals_.push_back(std::move(value));
        grads_.emplace_back();
        backs_.push_back(std::move(back));
        return static_cast<int>(vals_.size()) - 1;
    }

    const Tensor<T>& val(int id) const { return vals_[static_cast<size_t>(id)]; }
    Tensor<T>& val(int id) { return vals_[static_cast<size_t>(id)]; }

    bool has_grad(int id) const {
        return grads_[static_cast<size_t>(id)].has_value();
    }

    /// Gradient buffer of id, zero-initialized on first access.
    Tensor<T>& grad(int id) {
        auto& slot = grads_[static_cast<size_t>(id)];
        if (!slot) slot.emplace(vals_[static_cast<size_t>(id)].shape);
        return *slot;
    }

    void backward(int root) {
        detail::check(root >= 0 && root < static_cast<int>(vals_.size()),
                      "backward root out of range");
        auto& seed = grad(root);
        std::fill(seed.data.begin(), seed.data.end(), T(1));
        for (int id = root; id >= 0; --id) {
            if (!grads_[static_cast<size_t>(id)]) continue;
            if (backs_[static_cast<size_t>(id)]) backs_[static_cast<size_t>(id)](*this);
        }
    }

    int size() const { return static_cast<int>(vals_.size()); }

private:
    std::vector<Tensor<T>> vals_;
    std::vector<std::optional<Tensor<T>>> grads_;
    std::vector<BackFn> backs_;
};

}  // namespace raygrid::nn
