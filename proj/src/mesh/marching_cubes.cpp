// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/mesh/marching_cubes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

namespace raygrid::mesh {

double TriMesh::surface_area() const {
    double area = 0.0;
    for (const auto& t : triangles) {
        const Vec3& a = vertices[static_cast<size_t>(t[0])];
        const Vec3& b = vertices[static_cast<size_t>(t[1])];
        const Vec3& c = vertices[static_cast<size_t>(t[2])];
        area += 0.5 * (b - a).cross(c - a).norm();
    }
    return area;
}

int64_t TriMesh::edge_count() const {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[static_cast<size_t>(k)];
            const int b = t[static_cast<size_t>((k + 1) % 3)];
            edges.emplace(std::min(a, b), std::max(a, b));
        }
    return static_cast<int64_t>(edges.size());
}

bool TriMesh::watertight() const {
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[static_cast<size_t>(k)];
            const int b = t[static_cast<size_t>((k + 1) % 3)];
            if (a == b) return false;
            ++edges[{std::min(a, b), std::max(a, b)}];
        }
    if (triangles.empty()) return true;
    for (const auto& [edge, count] : edges)
        if (count != 2) return false;
    return true;
}

namespace {

// Cube corners: bit 0 = +x, bit 1 = +y, bit 2 = +z.
constexpr std::array<std::array<int, 3>, 8> kCorner = {{{0, 0, 0},
                                                        {1, 0, 0},
                                                        {0, 1, 0},
                                                        {1, 1, 0},
                                                        {0, 0, 1},
                                                        {1, 0, 1},
                                                        {0, 1, 1},
                                                        {1, 1, 1}}};

// The 12 cube edges as corner pairs, lower corner first.
constexpr std::array<std::array<int, 2>, 12> kEdge = {{{0, 1},
                                                       {2, 3},
                                                       {4, 5},
                                                       {6, 7},
                                                       {0, 2},
                                                       {1, 3},
                                                       {4, 6},
                                                       {5, 7},
                                                       {0, 4},
                                                       {1, 5},
                                                       {2, 6},
                                                       {3, 7}}};

// Axis along which each edge runs (0 = x, 1 = y, 2 = z).
constexpr std::array<int, 12> kEdgeAxis = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};

// Cube faces: corners in cyclic order. Between cyclic neighbors lies one edge.
constexpr std::array<std::array<int, 4>, 6> kFaceCorner = {{
    {0, 1, 3, 2},  // z = 0
    {4, 6, 7, 5},  // z = 1
    {0, 4, 5, 1},  // y = 0
    {2, 3, 7, 6},  // y = 1
    {0, 2, 6, 4},  // x = 0
    {1, 5, 7, 3},  // x = 1
}};

int edge_between(int a, int b) {
    for (int e = 0; e < 12; ++e) {
        if ((kEdge[static_cast<size_t>(e)][0] == a && kEdge[static_cast<size_t>(e)][1] == b) ||
            (kEdge[static_cast<size_t>(e)][0] == b && kEdge[static_cast<size_t>(e)][1] == a))
            return e;
    }
    return -1;
}

/// Triangles (as edge-id triples) for one of the 256 corner configurations.
/// Per face, each maximal cyclic run of inside corners contributes one
/// directed contour segment, from the crossing edge after the run to the one
/// before it. The rule depends only on the face's corner signs, so the two
/// cubes sharing a face agree, and on ambiguous faces (two diagonal inside
/// corners) the two runs give two segments cutting off the inside corners.
/// The face listings traverse shared cube edges in opposite directions, so
/// every crossing edge gets exactly one incoming and one outgoing segment;
/// following them yields closed loops whose fan triangulation is oriented
/// outward (verified against hand-worked cases in the tests).
std::vector<std::array<int, 3>> build_case(int config) {
    const auto inside = [&](int corner) { return ((config >> corner) & 1) != 0; };

    std::array<int, 12> next_edge;
    next_edge.fill(-1);
    for (const auto& face : kFaceCorner) {
        const auto inside_at = [&](int k) { return inside(face[static_cast<size_t>(k % 4)]); };
        const auto edge_at = [&](int k) {
            return edge_between(face[static_cast<size_t>(k % 4)],
                                face[static_cast<size_t>((k + 1) % 4)]);
        };
        for (int k = 0; k < 4; ++k) {
            if (!inside_at(k) || inside_at(k + 3)) continue;  // not a run start
            int end = k;
            while (inside_at(end + 1)) ++end;
            if (end - k == 3) break;  // whole face inside
            next_edge[static_cast<size_t>(edge_at(end))] = edge_at(k + 3);
        }
    }

    std::vector<std::array<int, 3>> triangles;
    std::array<char, 12> used;
    used.fill(0);
    for (int e0 = 0; e0 < 12; ++e0) {
        if (next_edge[static_cast<size_t>(e0)] < 0 || used[static_cast<size_t>(e0)]) continue;
        std::vector<int> loop;
        int e = e0;
        do {
            used[static_cast<size_t>(e)] = 1;
            loop.push_back(e);
            e = next_edge[static_cast<size_t>(e)];
        } while (e != e0);
        for (size_t k = 1; k + 1 < loop.size(); ++k)
            triangles.push_back({loop[0], loop[k], loop[k + 1]});
    }
    return triangles;
}

const std::array<std::vector<std::array<int, 3>>, 256>& cube_table() {
    static const auto table = [] {
        std::array<std::vector<std::array<int, 3>>, 256> t;
        for (int c = 0; c < 256; ++c) t[static_cast<size_t>(c)] = build_case(c);
        return t;
    }();
    return table;
}

}  // namespace

TriMesh marching_cubes(const std::vector<double>& field,
                       const std::array<int, 3>& dims, double iso) {
    detail::check(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1,
                  "marching_cubes: dims must be positive");
    detail::check(static_cast<int64_t>(field.size()) ==
                      static_cast<int64_t>(dims[0]) * dims[1] * dims[2],
                  "marching_cubes: field size mismatch");
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    const double pad = iso - 1.0;
    const auto sample = [&](int x, int y, int z) {
        if (x < 0 || x >= nx || y < 0 || y >= ny || z < 0 || z >= nz) return pad;
        return field[static_cast<size_t>(x + nx * (y + static_cast<int64_t>(ny) * z))];
    };

    TriMesh out;
    std::unordered_map<int64_t, int> edge_vertex;
    const int64_t lx = nx + 2, ly = ny + 2;
    const auto edge_key = [&](int x, int y, int z, int axis) {
        return ((static_cast<int64_t>(z + 1) * ly + (y + 1)) * lx + (x + 1)) * 4 + axis;
    };
    const auto& table = cube_table();

    for (int z = -1; z < nz; ++z)
        for (int y = -1; y < ny; ++y)
            for (int x = -1; x < nx; ++x) {
                int config = 0;
                std::array<double, 8> value;
                for (int c = 0; c < 8; ++c) {
                    value[static_cast<size_t>(c)] =
                        sample(x + kCorner[static_cast<size_t>(c)][0], y + kCorner[static_cast<size_t>(c)][1],
                               z + kCorner[static_cast<size_t>(c)][2]);
                    if (value[static_cast<size_t>(c)] >= iso) config |= 1 << c;
                }
                const auto& tris = table[static_cast<size_t>(config)];
                if (tris.empty()) continue;
                std::array<int, 12> vert_of_edge;
                vert_of_edge.fill(-1);
                const auto vertex_on = [&](int e) {
                    if (vert_of_edge[static_cast<size_t>(e)] >= 0)
                        return vert_of_edge[static_cast<size_t>(e)];
                    const int a = kEdge[static_cast<size_t>(e)][0];
                    const int b = kEdge[static_cast<size_t>(e)][1];
                    const int bx = x + kCorner[static_cast<size_t>(a)][0];
                    const int by = y + kCorner[static_cast<size_t>(a)][1];
                    const int bz = z + kCorner[static_cast<size_t>(a)][2];
                    const int64_t key = edge_key(bx, by, bz, kEdgeAxis[static_cast<size_t>(e)]);
                    const auto it = edge_vertex.find(key);
                    if (it != edge_vertex.end()) {
                        vert_of_edge[static_cast<size_t>(e)] = it->second;
                        return it->second;
                    }
                    const double fa = value[static_cast<size_t>(a)];
                    const double fb = value[static_cast<size_t>(b)];
                    double t = (iso - fa) / (fb - fa);
                    t = std::clamp(t, 0.0, 1.0);
                    Vec3 p(bx, by, bz);
                    p[kEdgeAxis[static_cast<size_t>(e)]] += t;
                    const int id = static_cast<int>(out.vertices.size());
                    out.vertices.push_back(p);
                    edge_vertex.emplace(key, id);
                    vert_of_edge[static_cast<size_t>(e)] = id;
                    return id;
                };
                for (const auto& tri : tris)
                    out.triangles.push_back(
                        {vertex_on(tri[0]), vertex_on(tri[1]), vertex_on(tri[2])});
            }
    return out;
}

TriMesh shape_mesh(const std::vector<float>& shape_logits, int shape_dim, double iso) {
    detail::check(shape_dim >= 1, "shape_mesh: shape_dim must be positive");
    detail::check(static_cast<int64_t>(shape_logits.size()) ==
                      static_cast<int64_t>(shape_dim) * shape_dim * shape_dim,
                  "shape_mesh: logit count mismatch");
    detail::check(iso > 0.0 && iso < 1.0, "shape_mesh: iso must be in (0, 1)");
    std::vector<double> occupancy(shape_logits.size());
    for (size_t i = 0; i < shape_logits.size(); ++i)
        occupancy[i] = 1.0 / (1.0 + std::exp(-static_cast<double>(shape_logits[i])));
    TriMesh mesh =
        marching_cubes(occupancy, {shape_dim, shape_dim, shape_dim}, iso);
    const double inv = 1.0 / shape_dim;
    for (auto& v : mesh.vertices) v = (v + Vec3(0.5, 0.5, 0.5)) * inv - Vec3(0.5, 0.5, 0.5);
    return mesh;
}

TriMesh volume_mesh(const BitVolume& volume) {
    std::vector<double> field(static_cast<size_t>(volume.count()));
    for (int64_t i = 0; i < volume.count(); ++i) field[static_cast<size_t>(i)] = volume.get(i) ? 1.0 : 0.0;
    return marching_cubes(field, volume.dims, 0.5);
}

TriMesh apply_pose(const heads::ObjectPose& pose, const TriMesh& canonical) {
    TriMesh out = canonical;
    for (auto& v : out.vertices) v = heads::apply_pose(pose, v);
    return out;
}

std::array<Vec3, 8> box_corners(const heads::ObjectPose& pose) {
    std::array<Vec3, 8> corners;
    for (int c = 0; c < 8; ++c) {
        const Vec3 canonical(kCorner[static_cast<size_t>(c)][0] - 0.5,
                             kCorner[static_cast<size_t>(c)][1] - 0.5,
                             kCorner[static_cast<size_t>(c)][2] - 0.5);
        corners[static_cast<size_t>(c)] = heads::apply_pose(pose, canonical);
    }
    return corners;
}

void save_obj(const std::filesystem::path& path, const TriMesh& mesh) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write mesh file: " + path.string());
    char line[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(line, sizeof(line), "v %.6f %.6f %.6f\n", v.x(), v.y(), v.z());
        f << line;
    }
    for (const auto& t : mesh.triangles) {
        std::snprintf(line, sizeof(line), "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
        f << line;
    }
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace raygrid::mesh
