// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/geometry/camera.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace raygrid::geometry {

void CameraIntrinsics::validate() const {
    detail::check(fx > 0.0 && fy > 0.0, "focal lengths must be positive");
    detail::check(width > 0 && height > 0, "image size must be positive");
    detail::check(std::isfinite(cx) && std::isfinite(cy),
                  "principal point must be finite");
}

void CameraPose::validate(double tol) const {
    const Mat3 rtr = rotation.transpose() * rotation;
    detail::check((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol,
                  "rotation must be orthonormal");
    detail::check(std::abs(rotation.determinant() - 1.0) <= tol,
                  "rotation must have determinant +1");
    detail::check(translation.allFinite(), "translation must be finite");
}

void CameraView::validate() const {
    intrinsics.validate();
    pose.validate();
    detail::check(feature_width > 0 && feature_height > 0,
                  "feature grid size must be positive");
    detail::check(intrinsics.width % feature_width == 0 &&
                      intrinsics.height % feature_height == 0,
                  "feature grid must divide the image size evenly");
}

namespace {

Ray ray_through(const CameraView& view, double u, double v, const RayClip& clip) {
    detail::check(clip.t_near > 0.0 && clip.t_far > clip.t_near,
                  "ray clip range must satisfy 0 < near < far");
    const Vec3 dir_cam((u - view.intrinsics.cx) / view.intrinsics.fx,
                       (v - view.intrinsics.cy) / view.intrinsics.fy, 1.0);
    Ray ray;
    ray.origin = view.pose.translation;
    ray.direction = (view.pose.rotation * dir_cam).normalized();
    // Clip distances are along the optical axis; rescale to the unit-length
    // ray parameterization so depth limits match the camera frustum.
    const double axial = dir_cam.norm();
    ray.t_near = clip.t_near * axial;
    ray.t_far = clip.t_far * axial;
    return ray;
}

}  // namespace

Ray pixel_ray(const CameraView& view, int row, int col, const RayClip& clip) {
    detail::check(row >= 0 && row < view.feature_height && col >= 0 &&
                      col < view.feature_width,
                  "feature cell out of range");
    return ray_through(view, (col + 0.5) * view.feature_stride_x(),
                       (row + 0.5) * view.feature_stride_y(), clip);
}

Ray image_pixel_ray(const CameraView& view, int row, int col, const RayClip& clip) {
    detail::check(row >= 0 && row < view.intrinsics.height && col >= 0 &&
                      col < view.intrinsics.width,
                  "image pixel out of range");
    return ray_through(view, col + 0.5, row + 0.5, clip);
}

bool project_to_feature_cell(const CameraView& view, const Vec3& p, int& row,
                             int& col) {
    const Vec3 cam = view.pose.rotation.transpose() * (p - view.pose.translation);
    if (cam.z() <= 0.0) return false;
    const double u = view.intrinsics.fx * cam.x() / cam.z() + view.intrinsics.cx;
    const double v = view.intrinsics.fy * cam.y() / cam.z() + view.intrinsics.cy;
    if (u < 0.0 || u >= view.intrinsics.width || v < 0.0 ||
        v >= view.intrinsics.height) {
        return false;
    }
    col = static_cast<int>(u) / view.feature_stride_x();
    row = static_cast<int>(v) / view.feature_stride_y();
    return true;
}

namespace {

nlohmann::json view_to_json(const CameraView& view) {
    nlohmann::json j;
    j["fx"] = view.intrinsics.fx;
    j["fy"] = view.intrinsics.fy;
    j["cx"] = view.intrinsics.cx;
    j["cy"] = view.intrinsics.cy;
    j["width"] = view.intrinsics.width;
    j["height"] = view.intrinsics.height;
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot[r * 3 + c] = view.pose.rotation(r, c);
    j["rotation"] = rot;
    j["translation"] = {view.pose.translation.x(), view.pose.translation.y(),
                        view.pose.translation.z()};
    return j;
}

CameraView view_from_json(const nlohmann::json& j, int feature_stride) {
    CameraView view;
    view.intrinsics.fx = j.at("fx").get<double>();
    view.intrinsics.fy = j.at("fy").get<double>();
    view.intrinsics.cx = j.at("cx").get<double>();
    view.intrinsics.cy = j.at("cy").get<double>();
    view.intrinsics.width = j.at("width").get<int>();
    view.intrinsics.height = j.at("height").get<int>();
    const auto rot = j.at("rotation").get<std::vector<double>>();
    detail::check(rot.size() == 9, "rotation must hold 9 row-major entries");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) view.pose.rotation(r, c) = rot[r * 3 + c];
    const auto t = j.at("translation").get<std::vector<double>>();
    detail::check(t.size() == 3, "translation must hold 3 entries");
    view.pose.translation = Vec3(t[0], t[1], t[2]);
    detail::check(feature_stride > 0, "feature stride must be positive");
    detail::check(view.intrinsics.width % feature_stride == 0 &&
                      view.intrinsics.height % feature_stride == 0,
                  "feature stride must divide the image size evenly");
    view.feature_width = view.intrinsics.width / feature_stride;
    view.feature_height = view.intrinsics.height / feature_stride;
    view.validate();
    return view;
}

}  // namespace

std::vector<CameraView> load_trajectory(const std::filesystem::path& path,
                                        int feature_stride) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open trajectory file: " + path.string());
    nlohmann::json j;
    f >> j;
    const nlohmann::json& frames = j.is_array() ? j : j.at("frames");
    std::vector<CameraView> views;
    views.reserve(frames.size());
    for (const auto& frame : frames) views.push_back(view_from_json(frame, feature_stride));
    return views;
}

void save_trajectory(const std::filesystem::path& path,
                     const std::vector<CameraView>& views) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& view : views) frames.push_back(view_to_json(view));
    nlohmann::json j;
    j["frames"] = frames;
    std::ofstream f(path);
    if (!f) throw IoError("cannot write trajectory file: " + path.string());
    f << j.dump(2) << '\n';
}

}  // namespace raygrid::geometry
