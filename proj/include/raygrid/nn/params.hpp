// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "raygrid/nn/rng.hpp"
#include "raygrid/nn/tape.hpp"
#include "raygrid/nn/tensor.hpp"

namespace raygrid::nn {

template <typename T>
struct ParamEntry {
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;  // first AdamW moment
    Tensor<T> v;  // second AdamW moment
};

/// Named model parameters with get-or-create semantics. Each parameter is
/// initialized from an RNG keyed by (store seed, name), so adding or removing
/// unrelated parameters never changes another parameter's initial values.
template <typename T>
class ParamStore {
  public:
    explicit ParamStore(uint64_t seed = 0) : seed_(seed) {}

    Tensor<T>& xavier(const std::string& name, std::vector<int64_t> shape,
                      int64_t fan_in, int64_t fan_out) {
        return ensure(name, std::move(shape), [&](Rng& rng, Tensor<T>& t) {
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            for (auto& x : t.data) x = static_cast<T>(rng.uniform(-limit, limit));
        });
    }

    Tensor<T>& normal(const std::string& name, std::vector<int64_t> shape, double stddev) {
        return ensure(name, std::move(shape), [&](Rng& rng, Tensor<T>& t) {
            for (auto& x : t.data) x = static_cast<T>(rng.normal() * stddev);
        });
    }

    Tensor<T>& zeros(const std::string& name, std::vector<int64_t> shape) {
        return ensure(name, std::move(shape), [](Rng&, Tensor<T>&) {});
    }

    Tensor<T>& ones(const std::string& name, std::vector<int64_t> shape) {
        return ensure(name, std::move(shape), [](Rng&, Tensor<T>& t) {
            for (auto& x : t.data) x = static_cast<T>(1);
        });
    }

    /// Constant fill, for biased initialization of specific logits.
    Tensor<T>& constant(const std::string& name, std::vector<int64_t> shape, double value) {
        return ensure(name, std::move(shape), [&](Rng&, Tensor<T>& t) {
            for (auto& x : t.data) x = static_cast<T>(value);
        });
    }

    /// Get-or-create with explicit initial values.
    Tensor<T>& tensor(const std::string& name, Tensor<T> init) {
        auto shape = init.shape;
        return ensure(name, std::move(shape),
                      [&](Rng&, Tensor<T>& t) { t.data = std::move(init.data); });
    }

    bool contains(const std::string& name) const { return entries_.count(name) > 0; }

    ParamEntry<T>& at(const std::string& name) {
        auto it = entries_.find(name);
        detail::check(it != entries_.end(), "unknown parameter: " + name);
        return it->second;
    }

    std::map<std::string, ParamEntry<T>>& entries() { return entries_; }
    const std::map<std::string, ParamEntry<T>>& entries() const { return entries_; }

    void zero_grads() {
        for (auto& [name, entry] : entries_)
            std::fill(entry.grad.data.begin(), entry.grad.data.end(), static_cast<T>(0));
    }

    int64_t n_scalars() const {
        int64_t n = 0;
        for (const auto& [name, entry] : entries_) n += entry.value.numel();
        return n;
    }

    uint64_t seed() const { return seed_; }

  private:
    template <typename Init>
    Tensor<T>& ensure(const std::string& name, std::vector<int64_t> shape, Init init) {
        auto it = entries_.find(name);
        if (it != entries_.end()) {
            detail::check(it->second.value.shape == shape,
                          "parameter shape mismatch: " + name);
            return it->second.value;
        }
        ParamEntry<T> entry;
        entry.value = Tensor<T>(shape);
        Rng rng(mix_seed(seed_, name));
        init(rng, entry.value);
        entry.grad = Tensor<T>(shape);
        entry.m = Tensor<T>(shape);
        entry.v = Tensor<T>(std::move(shape));
        return entries_.emplace(name, std::move(entry)).first->second.value;
    }

    std::map<std::string, ParamEntry<T>> entries_;
    uint64_t seed_ = 0;
};

/// Binds store parameters into a tape as leaves (one per name) and copies the
/// resulting gradients back after backward().
template <typename T>
class TapeBinding {
  public:
    TapeBinding(Tape<T>& tape, ParamStore<T>& store) : tape_(&tape), store_(&store) {}

    int xavier(const std::string& name, std::vector<int64_t> shape, int64_t fan_in,
               int64_t fan_out) {
        return bind(name, store_->xavier(name, std::move(shape), fan_in, fan_out));
    }
    int normal(const std::string& name, std::vector<int64_t> shape, double stddev) {
        return bind(name, store_->normal(name, std::move(shape), stddev));
    }
    int zeros(const std::string& name, std::vector<int64_t> shape) {
        return bind(name, store_->zeros(name, std::move(shape)));
    }
    int ones(const std::string& name, std::vector<int64_t> shape) {
        return bind(name, store_->ones(name, std::move(shape)));
    }
    int constant(const std::string& name, std::vector<int64_t> shape, double value) {
        return bind(name, store_->constant(name, std::move(shape), value));
    }
    int tensor(const std::string& name, Tensor<T> init) {
        return bind(name, store_->tensor(name, std::move(init)));
    }

    ParamStore<T>& store() { return *store_; }

    /// Accumulates tape gradients of every bound parameter into the store.
    void add_grads() {
        for (const auto& [name, id] : bound_) {
            if (!tape_->has_grad(id)) continue;
            const Tensor<T>& g = tape_->grad(id);
            Tensor<T>& dst = store_->at(name).grad;
            for (int64_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
        }
    }

  private:
    int bind(const std::string& name, Tensor<T>& value) {
        auto it = ids_.find(name);
        if (it != ids_.end()) return it->second;
        const int id = tape_->leaf(value);
        ids_.emplace(name, id);
        bound_.emplace_back(name, id);
        return id;
    }

    Tape<T>* tape_;
    ParamStore<T>* store_;
    std::map<std::string, int> ids_;
    std::vector<std::pair<std::string, int>> bound_;
};

}  // namespace raygrid::nn
