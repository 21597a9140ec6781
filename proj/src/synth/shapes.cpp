// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/synth/synth.hpp"

#include <cmath>
#include <iterator>
#include <string>

namespace raygrid::synth {

namespace {

struct CategorySpec {
    const char* name;
    Vec3 color;
};

constexpr int kBox = 0;
constexpr int kCylinder = 1;
constexpr int kLshape = 2;
constexpr int kTable = 3;
constexpr int kTee = 4;

const CategorySpec kCategories[] = {
    {"box", Vec3(0.75, 0.30, 0.25)},
    {"cylinder", Vec3(0.25, 0.45, 0.80)},
    {"lshape", Vec3(0.30, 0.65, 0.35)},
    {"table", Vec3(0.72, 0.52, 0.28)},
    {"tee", Vec3(0.58, 0.35, 0.70)},
};

bool cell_occupied(int category, double x, double y, double z) {
    switch (category) {
        case kBox:
            return true;
        case kCylinder:
            return x * x + y * y <= 0.25;
        case kLshape:
            return !(x > 0.0 && y > 0.0);
        case kTable:
            if (z >= 0.3) return true;  // top slab
            return std::abs(x) >= 0.3 && std::abs(y) >= 0.3;  // corner legs
        case kTee:
            // Crossbar along y at the +x side, stem along x.
            return x >= 0.2 || std::abs(y) <= 0.25;
        default:
            throw ValueError("unknown category " + std::to_string(category));
    }
}

}  // namespace

int n_categories() { return static_cast<int>(std::size(kCategories)); }

const char* category_name(int category) {
    detail::check(category >= 0 && category < n_categories(),
                  "category out of range");
    return kCategories[category].name;
}

Vec3 category_color(int category) {
    detail::check(category >= 0 && category < n_categories(),
                  "category out of range");
    return kCategories[category].color;
}

BitVolume canonical_shape(int category, int dim) {
    detail::check(dim > 0, "canonical_shape: dim must be positive");
    detail::check(category >= 0 && category < n_categories(),
                  "category out of range");
    BitVolume shape({dim, dim, dim});
    for (int z = 0; z < dim; ++z) {
        const double cz = (z + 0.5) / dim - 0.5;
        for (int y = 0; y < dim; ++y) {
            const double cy = (y + 0.5) / dim - 0.5;
            for (int x = 0; x < dim; ++x) {
                const double cx = (x + 0.5) / dim - 0.5;
                if (cell_occupied(category, cx, cy, cz)) shape.set(x, y, z, true);
            }
        }
    }
    return shape;
}

}  // namespace raygrid::synth
