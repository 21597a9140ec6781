// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "raygrid/common.hpp"

namespace raygrid::nn {

/// Dense row-major tensor. The last axis varies fastest; feature grids use
/// channels-last layouts ([view, row, col, ch] in 2D, [z, y, x, ch] in 3D so
/// the flat spatial order matches the x-fastest voxel flattening).
template <typename T>
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), T(0));
    }
    Tensor(std::vector<int64_t> s, std::vector<T> d)
        : shape(std::move(s)), data(std::move(d)) {
        detail::check(static_cast<int64_t>(data.size()) == numel_of(shape),
                      "tensor data size does not match shape");
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) {
            detail::check(d >= 0, "negative tensor dimension");
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int64_t> s, T value) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }
    static Tensor scalar(T value) { return Tensor({}, {value}); }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int64_t dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    Tensor reshaped(std::vector<int64_t> s) const {
        detail::check(numel_of(s) == numel(), "reshape changes element count");
        return Tensor(std::move(s), data);
    }

    bool all_finite() const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

inline std::string shape_str(const std::vector<int64_t>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

template <typename T>
void check_shape(const Tensor<T>& t, const std::vector<int64_t>& want,
                 const std::string& what) {
    if (t.shape != want) {
        throw ShapeError(what + ": expected shape " + shape_str(want) + ", got " +
                         shape_str(t.shape));
    }
}

template <typename T>
void check_finite(const Tensor<T>& t, const std::string& what) {
    if (!t.all_finite()) throw ValueError(what + ": non-finite values");
}

}  // namespace raygrid::nn
