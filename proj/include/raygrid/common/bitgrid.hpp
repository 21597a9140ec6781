// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "raygrid/common.hpp"

namespace raygrid {

/// Packed 3D bitset, x varying fastest (index = x + nx*(y + ny*z)).
struct BitVolume {
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<uint64_t> words;

    BitVolume() = default;
    explicit BitVolume(const std::array<int, 3>& d) : dims(d) {
        words.assign((static_cast<size_t>(count()) + 63) / 64, 0);
    }
    int64_t count() const {
        return static_cast<int64_t>(dims[0]) * dims[1] * dims[2];
    }
    int64_t flat(int x, int y, int z) const {
        return x + static_cast<int64_t>(dims[0]) * (y + static_cast<int64_t>(dims[1]) * z);
    }
    bool get(int64_t i) const {
        return (words[static_cast<size_t>(i >> 6)] >> (i & 63)) & 1u;
    }
    bool get(int x, int y, int z) const { return get(flat(x, y, z)); }
    void set(int64_t i, bool v) {
        const uint64_t bit = 1ull << (i & 63);
        if (v)
            words[static_cast<size_t>(i >> 6)] |= bit;
        else
            words[static_cast<size_t>(i >> 6)] &= ~bit;
    }
    void set(int x, int y, int z, bool v) { set(flat(x, y, z), v); }
    int64_t popcount() const {
        int64_t n = 0;
        for (uint64_t w : words) n += __builtin_popcountll(w);
        return n;
    }
};

/// Packed 2D bitset, column varying fastest (index = col + width*row).
struct BitImage {
    int height = 0, width = 0;
    std::vector<uint64_t> words;

    BitImage() = default;
    BitImage(int h, int w) : height(h), width(w) {
        words.assign((static_cast<size_t>(h) * w + 63) / 64, 0);
    }
    int64_t flat(int row, int col) const {
        return col + static_cast<int64_t>(width) * row;
    }
    bool get(int row, int col) const {
        const int64_t i = flat(row, col);
        return (words[static_cast<size_t>(i >> 6)] >> (i & 63)) & 1u;
    }
    void set(int row, int col, bool v) {
        const int64_t i = flat(row, col);
        const uint64_t bit = 1ull << (i & 63);
        if (v)
            words[static_cast<size_t>(i >> 6)] |= bit;
        else
            words[static_cast<size_t>(i >> 6)] &= ~bit;
    }
    int64_t popcount() const {
        int64_t n = 0;
        for (uint64_t w : words) n += __builtin_popcountll(w);
        return n;
    }
};

/// Intersection-over-union of two equally shaped bit volumes.
inline double bit_iou(const BitVolume& a, const BitVolume& b) {
    detail::check(a.dims == b.dims, "bit_iou: dims mismatch");
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.words.size(); ++i) {
        inter += __builtin_popcountll(a.words[i] & b.words[i]);
        uni += __builtin_popcountll(a.words[i] | b.words[i]);
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace raygrid
