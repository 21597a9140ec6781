// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "raygrid/nn/parallel.hpp"
#include "raygrid/synth/synth.hpp"

namespace raygrid::synth {

namespace {

constexpr double kAmbient = 0.35;
constexpr double kDiffuse = 0.65;
constexpr double kNearClip = 0.05;

const Vec3 kLightDir = Vec3(0.35, 0.25, 0.90).normalized();
const Vec3 kBackgroundTop(0.30, 0.34, 0.40);
const Vec3 kBackgroundBottom(0.09, 0.10, 0.12);

}  // namespace

Vec3 background_color(int row, int height) {
    const double t = (row + 0.5) / height;
    return kBackgroundTop + (kBackgroundBottom - kBackgroundTop) * t;
}

namespace {

double instance_tint(int index) {
    const double phase = index * 0.618033988749895;
    return 0.72 + 0.28 * (phase - std::floor(phase));
}

struct Vertex {
    double u, v;      // image coordinates
    double inv_z;     // 1 / camera-space depth
};

struct ViewFrame {
    Mat3 world_to_cam;
    Vec3 cam_origin;
    double fx, fy, cx, cy;
    int width, height;
};

ViewFrame frame_of(const geometry::CameraView& view) {
    ViewFrame f;
    f.world_to_cam = view.pose.rotation.transpose();
    f.cam_origin = view.pose.translation;
    f.fx = view.intrinsics.fx;
    f.fy = view.intrinsics.fy;
    f.cx = view.intrinsics.cx;
    f.cy = view.intrinsics.cy;
    f.width = view.intrinsics.width;
    f.height = view.intrinsics.height;
    return f;
}

double edge(const Vertex& a, const Vertex& b, double qx, double qy) {
    return (b.u - a.u) * (qy - a.v) - (b.v - a.v) * (qx - a.u);
}

// A planar face is filled as one convex quad rather than two triangles: the
// four edge functions are each evaluated once per pixel, so there is no
// internal diagonal whose two float evaluations could disagree and drop
// pixels. 1/depth is affine over the projection of a planar face, recovered
// here from three of its corners.
void fill_quad(const std::array<Vertex, 4>& v, const Vec3& color,
               const ViewFrame& f, std::vector<double>& zbuf, float* image,
               BitImage& visible) {
    double area2 = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Vertex& a = v[static_cast<size_t>(i)];
        const Vertex& b = v[static_cast<size_t>((i + 1) % 4)];
        area2 += a.u * b.v - b.u * a.v;
    }
    if (std::abs(area2) < 1e-9) return;  // edge-on

    size_t p = 1, q = 2;
    double du1 = v[p].u - v[0].u, dv1 = v[p].v - v[0].v;
    double du2 = v[q].u - v[0].u, dv2 = v[q].v - v[0].v;
    double det = du1 * dv2 - dv1 * du2;
    if (std::abs(det) < 1e-12) {
        p = 2, q = 3;
        du1 = v[p].u - v[0].u, dv1 = v[p].v - v[0].v;
        du2 = v[q].u - v[0].u, dv2 = v[q].v - v[0].v;
        det = du1 * dv2 - dv1 * du2;
        if (std::abs(det) < 1e-12) return;
    }
    const double diz1 = v[p].inv_z - v[0].inv_z;
    const double diz2 = v[q].inv_z - v[0].inv_z;
    const double beta = (diz1 * dv2 - diz2 * dv1) / det;
    const double gamma = (diz2 * du1 - diz1 * du2) / det;

    const double u_lo = std::min({v[0].u, v[1].u, v[2].u, v[3].u});
    const double u_hi = std::max({v[0].u, v[1].u, v[2].u, v[3].u});
    const double v_lo = std::min({v[0].v, v[1].v, v[2].v, v[3].v});
    const double v_hi = std::max({v[0].v, v[1].v, v[2].v, v[3].v});
    const int col_lo = std::max(0, static_cast<int>(std::floor(u_lo - 0.5)));
    const int col_hi =
        std::min(f.width - 1, static_cast<int>(std::ceil(u_hi - 0.5)));
    const int row_lo = std::max(0, static_cast<int>(std::floor(v_lo - 0.5)));
    const int row_hi =
        std::min(f.height - 1, static_cast<int>(std::ceil(v_hi - 0.5)));
    for (int row = row_lo; row <= row_hi; ++row) {
        const double qy = row + 0.5;
        for (int col = col_lo; col <= col_hi; ++col) {
            const double qx = col + 0.5;
            bool nonneg = true, nonpos = true;
            for (int i = 0; i < 4; ++i) {
                const double e = edge(v[static_cast<size_t>(i)],
                                      v[static_cast<size_t>((i + 1) % 4)], qx, qy);
                nonneg &= e >= 0.0;
                nonpos &= e <= 0.0;
            }
            if (!nonneg && !nonpos) continue;
            const double inv_z =
                v[0].inv_z + beta * (qx - v[0].u) + gamma * (qy - v[0].v);
            if (inv_z <= 0.0) continue;
            const double z = 1.0 / inv_z;
            double& slot = zbuf[static_cast<size_t>(row) * f.width + col];
            if (z >= slot) continue;
            slot = z;
            float* px = image + (static_cast<int64_t>(row) * f.width + col) * 3;
            px[0] = static_cast<float>(color.x());
            px[1] = static_cast<float>(color.y());
            px[2] = static_cast<float>(color.z());
            visible.set(row, col, true);
        }
    }
}

void render_face(const std::array<Vec3, 4>& world, const Vec3& color,
                 const ViewFrame& f, std::vector<double>& zbuf, float* image,
                 BitImage& visible) {
    std::array<Vertex, 4> v;
    for (int i = 0; i < 4; ++i) {
        const Vec3 pc = f.world_to_cam * (world[i] - f.cam_origin);
        if (pc.z() < kNearClip) return;
        v[i] = {f.fx * pc.x() / pc.z() + f.cx, f.fy * pc.y() / pc.z() + f.cy,
                1.0 / pc.z()};
    }
    fill_quad(v, color, f, zbuf, image, visible);
}

// Outward face directions and, per direction, the four cell-corner offsets
// (in cell units) that bound the face, ordered counterclockwise when seen
// from outside.
struct FaceSpec {
    int dx, dy, dz;
    std::array<std::array<int, 3>, 4> corners;
};

const FaceSpec kFaces[] = {
    {+1, 0, 0, {{{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {1, 0, 1}}}},
    {-1, 0, 0, {{{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}}}},
    {0, +1, 0, {{{0, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 1, 0}}}},
    {0, -1, 0, {{{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}}}},
    {0, 0, +1, {{{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}}},
    {0, 0, -1, {{{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}}}},
};

/// Shading of each face direction under the posed object's surface normals.
std::array<Vec3, 6> face_colors(const heads::ObjectGT& object, int index) {
    const Vec3 base = category_color(object.category) * instance_tint(index);
    const double cy = std::cos(object.pose.yaw);
    const double sy = std::sin(object.pose.yaw);
    std::array<Vec3, 6> colors;
    for (int face = 0; face < 6; ++face) {
        const FaceSpec& spec = kFaces[face];
        // Normal transform for scale+yaw: rotate the scale-divided axis.
        const Vec3 n_canon(spec.dx / object.pose.scale.x(),
                           spec.dy / object.pose.scale.y(),
                           spec.dz / object.pose.scale.z());
        const Vec3 n_world =
            Vec3(cy * n_canon.x() - sy * n_canon.y(),
                 sy * n_canon.x() + cy * n_canon.y(), n_canon.z())
                .normalized();
        const double shade =
            kAmbient + kDiffuse * std::max(0.0, n_world.dot(kLightDir));
        colors[face] = (base * shade).cwiseMin(1.0).cwiseMax(0.0);
    }
    return colors;
}

void render_object(const heads::ObjectGT& object, int index,
                   const ViewFrame& f, std::vector<double>& zbuf, float* image,
                   BitImage& visible) {
    const int dim = object.shape.dims[0];
    const std::array<Vec3, 6> colors = face_colors(object, index);
    const double inv_dim = 1.0 / dim;
    for (int z = 0; z < dim; ++z) {
        for (int y = 0; y < dim; ++y) {
            for (int x = 0; x < dim; ++x) {
                if (!object.shape.get(x, y, z)) continue;
                for (int face = 0; face < 6; ++face) {
                    const FaceSpec& spec = kFaces[face];
                    const int nx = x + spec.dx, ny = y + spec.dy,
                              nz = z + spec.dz;
                    const bool neighbor_inside =
                        nx >= 0 && nx < dim && ny >= 0 && ny < dim &&
                        nz >= 0 && nz < dim;
                    if (neighbor_inside && object.shape.get(nx, ny, nz))
                        continue;
                    std::array<Vec3, 4> world;
                    for (int i = 0; i < 4; ++i) {
                        const Vec3 canon(
                            (x + spec.corners[i][0]) * inv_dim - 0.5,
                            (y + spec.corners[i][1]) * inv_dim - 0.5,
                            (z + spec.corners[i][2]) * inv_dim - 0.5);
                        world[i] = heads::apply_pose(object.pose, canon);
                    }
                    render_face(world, colors[face], f, zbuf, image, visible);
                }
            }
        }
    }
}

}  // namespace

RenderResult render_views(std::span<const heads::ObjectGT> objects,
                          std::span<const geometry::CameraView> views) {
    detail::check(!views.empty(), "render_views: no views");
    const int height = views[0].intrinsics.height;
    const int width = views[0].intrinsics.width;
    for (const geometry::CameraView& view : views) {
        view.validate();
        detail::check(view.intrinsics.height == height &&
                          view.intrinsics.width == width,
                      "render_views: views must share a resolution");
    }
    for (const heads::ObjectGT& object : objects) {
        detail::check(object.shape.dims[0] == object.shape.dims[1] &&
                          object.shape.dims[1] == object.shape.dims[2] &&
                          object.shape.dims[0] > 0,
                      "render_views: object shapes must be cubical");
    }

    RenderResult result;
    result.images = nn::Tensor<float>(
        {static_cast<int64_t>(views.size()), height, width, 3});
    result.visible.assign(views.size(), BitImage(height, width));

    nn::parallel_for(static_cast<int64_t>(views.size()), [&](int64_t vi) {
        const ViewFrame f = frame_of(views[static_cast<size_t>(vi)]);
        float* image =
            result.images.ptr() + vi * static_cast<int64_t>(height) * width * 3;
        for (int row = 0; row < height; ++row) {
            const Vec3 bg = background_color(row, height);
            for (int col = 0; col < width; ++col) {
                float* px = image + (static_cast<int64_t>(row) * width + col) * 3;
                px[0] = static_cast<float>(bg.x());
                px[1] = static_cast<float>(bg.y());
                px[2] = static_cast<float>(bg.z());
            }
        }
        std::vector<double> zbuf(static_cast<size_t>(height) * width,
                                 std::numeric_limits<double>::infinity());
        BitImage& visible = result.visible[static_cast<size_t>(vi)];
        for (size_t i = 0; i < objects.size(); ++i) {
            render_object(objects[i], static_cast<int>(i), f, zbuf, image,
                          visible);
        }
    });
    return result;
}

}  // namespace raygrid::synth
