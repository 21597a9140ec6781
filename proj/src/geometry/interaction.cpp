// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/geometry/interaction.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

namespace raygrid::geometry {

int64_t InteractionIndex::max_pairs_per_pixel() const {
    int64_t best = 0;
    int64_t run = 0;
    int64_t prev = -1;
    for (const auto& p : pairs) {
        const int64_t px = pixel_flat(p.view, p.row, p.col);
        run = px == prev ? run + 1 : 1;
        prev = px;
        best = std::max(best, run);
    }
    return best;
}

InteractionIndex build_interaction_index(std::span<const CameraView> views,
                                         const VoxelGridSpec& grid,
                                         const RayClip& clip) {
    grid.validate();
    InteractionIndex index;
    index.n_views = static_cast<uint32_t>(views.size());
    index.grid_dims = grid.dims;
    if (!views.empty()) {
        index.feature_height = static_cast<uint32_t>(views[0].feature_height);
        index.feature_width = static_cast<uint32_t>(views[0].feature_width);
    }
    for (uint32_t vi = 0; vi < views.size(); ++vi) {
        const CameraView& view = views[vi];
        view.validate();
        detail::check(view.feature_height == static_cast<int>(index.feature_height) &&
                          view.feature_width == static_cast<int>(index.feature_width),
                      "all views must share one feature-grid size");
        for (int r = 0; r < view.feature_height; ++r) {
            for (int c = 0; c < view.feature_width; ++c) {
                const Ray ray = pixel_ray(view, r, c, clip);
                for (const VoxelCoord& v : traverse_voxels(ray, grid)) {
                    index.pairs.push_back({vi, static_cast<uint32_t>(r),
                                           static_cast<uint32_t>(c),
                                           static_cast<uint32_t>(v.x),
                                           static_cast<uint32_t>(v.y),
                                           static_cast<uint32_t>(v.z)});
                }
            }
        }
    }
    std::sort(index.pairs.begin(), index.pairs.end());
    index.pairs.erase(std::unique(index.pairs.begin(), index.pairs.end()),
                      index.pairs.end());
    return index;
}

MemoryReport memory_report(const InteractionIndex& index, int n_heads,
                           int bytes_per_scalar) {
    detail::check(n_heads > 0 && bytes_per_scalar > 0,
                  "head count and scalar width must be positive");
    MemoryReport report;
    report.entries = static_cast<int64_t>(index.pairs.size());
    report.dense_bytes = 2.0 * static_cast<double>(index.n_pixels_total()) *
                         static_cast<double>(index.n_voxels_total()) * n_heads *
                         bytes_per_scalar;
    report.sparse_bytes =
        static_cast<double>(report.entries) * 3.0 * n_heads * 2.0 * bytes_per_scalar;
    report.ratio = report.entries == 0
                       ? std::numeric_limits<double>::infinity()
                       : report.dense_bytes / report.sparse_bytes;
    return report;
}

namespace {

constexpr char kMagic[4] = {'R', 'T', 'I', 'X'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
    put_u32(os, static_cast<uint32_t>(v));
    put_u32(os, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("truncated index file");
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

uint64_t get_u64(std::istream& is) {
    const uint64_t lo = get_u32(is);
    const uint64_t hi = get_u32(is);
    return lo | hi << 32;
}

}  // namespace

void save_index(const std::filesystem::path& path, const InteractionIndex& index) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write index file: " + path.string());
    f.write(kMagic, 4);
    put_u32(f, kVersion);
    put_u32(f, index.n_views);
    put_u32(f, index.feature_height);
    put_u32(f, index.feature_width);
    for (int a = 0; a < 3; ++a) put_u32(f, static_cast<uint32_t>(index.grid_dims[a]));
    put_u64(f, index.pairs.size());
    for (const auto& p : index.pairs) {
        put_u32(f, p.view);
        put_u32(f, p.row);
        put_u32(f, p.col);
        put_u32(f, p.vx);
        put_u32(f, p.vy);
        put_u32(f, p.vz);
    }
    if (!f) throw IoError("write failed: " + path.string());
}

InteractionIndex load_index(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open index file: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad index magic: " + path.string());
    const uint32_t version = get_u32(f);
    if (version != kVersion) throw IoError("unsupported index version");
    InteractionIndex index;
    index.n_views = get_u32(f);
    index.feature_height = get_u32(f);
    index.feature_width = get_u32(f);
    for (int a = 0; a < 3; ++a) index.grid_dims[a] = static_cast<int>(get_u32(f));
    const uint64_t count = get_u64(f);
    index.pairs.resize(count);
    InteractionPair prev{};
    for (uint64_t i = 0; i < count; ++i) {
        InteractionPair& p = index.pairs[i];
        p.view = get_u32(f);
        p.row = get_u32(f);
        p.col = get_u32(f);
        p.vx = get_u32(f);
        p.vy = get_u32(f);
        p.vz = get_u32(f);
        if (i > 0 && !(prev < p)) throw IoError("index pairs not strictly sorted");
        prev = p;
    }
    return index;
}

}  // namespace raygrid::geometry
