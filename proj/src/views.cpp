#include "instex/views.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace instex {

namespace {

constexpr double kObjectElevation = 15.0;
constexpr double kObjectDistance = 1.0;

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

bool is_pole(const Viewpoint& v) { return std::abs(std::abs(v.elevation) - 90.0) < 1e-9; }

int ring_count(double azimuth_step) {
    if (!(azimuth_step > 0.0)) throw std::invalid_argument("azimuth step must be positive");
    const double count = 360.0 / azimuth_step;
    if (std::abs(count - std::round(count)) > 1e-9) throw std::invalid_argument("azimuth step must divide 360");
    return static_cast<int>(std::round(count));
}

}  // namespace

std::string_view to_string(ViewKind kind) {
    switch (kind) {
        case ViewKind::ObjectOrbit: return "object_orbit";
        case ViewKind::ObjectTop: return "object_top";
        case ViewKind::ObjectBottom: return "object_bottom";
        case ViewKind::RoomPano: return "room_pano";
        case ViewKind::RoomUp: return "room_up";
        case ViewKind::RoomDown: return "room_down";
    }
    return "?";
}

Vec3 Viewpoint::direction() const {
    if (is_pole(*this)) return {0.0, elevation > 0.0 ? 1.0 : -1.0, 0.0};
    const double az = radians(azimuth);
    const double el = radians(elevation);
    return {std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)};
}

Vec3 Viewpoint::eye() const {
    if (is_room()) return look_at - direction();
    return look_at + distance * direction();
}

Vec3 Viewpoint::forward() const {
    const Vec3 f = look_at - eye();
    const double len = f.norm();
    return len > 0.0 ? Vec3(f / len) : Vec3(0, 0, -1);
}

Vec3 Viewpoint::up_hint() const { return is_pole(*this) ? Vec3(0, 0, 1) : Vec3(0, 1, 0); }

Camera::Projected Camera::project(const Vec3& world) const {
    const Vec3 c = to_camera(world);
    const double depth = -c.z();
    const double f = 1.0 / std::tan(radians(intrinsics.fov_y_degrees) / 2.0);
    const double ndc_x = f / intrinsics.aspect() * c.x() / depth;
    const double ndc_y = f * c.y() / depth;
    const double n = intrinsics.near_plane;
    const double fa = intrinsics.far_plane;
    Projected p;
    p.pixel = {(ndc_x + 1.0) * 0.5 * intrinsics.resolution.width, (1.0 - ndc_y) * 0.5 * intrinsics.resolution.height};
    p.depth = depth;
    p.ndc_depth = fa / (fa - n) - fa * n / ((fa - n) * depth);
    return p;
}

Vec3 Camera::pixel_ray(const Vec2& pixel) const {
    const double f = 1.0 / std::tan(radians(intrinsics.fov_y_degrees) / 2.0);
    const double ndc_x = 2.0 * pixel.x() / intrinsics.resolution.width - 1.0;
    const double ndc_y = 1.0 - 2.0 * pixel.y() / intrinsics.resolution.height;
    const Vec3 dir_cam(ndc_x * intrinsics.aspect() / f, ndc_y / f, -1.0);
    const Eigen::Matrix3d rot = view.topLeftCorner<3, 3>();
    return (rot.transpose() * dir_cam).normalized();
}

Camera camera_matrices(const Viewpoint& v, const CameraIntrinsics& k) {
    if (!(k.fov_y_degrees > 0.0 && k.fov_y_degrees < 180.0)) throw std::invalid_argument("fov must be in (0, 180)");
    if (!(k.near_plane > 0.0 && k.near_plane < k.far_plane)) throw std::invalid_argument("need 0 < near < far");
    if (k.resolution.width < 1 || k.resolution.height < 1) throw std::invalid_argument("empty image resolution");
    if (v.elevation < -90.0 || v.elevation > 90.0) throw std::invalid_argument("elevation out of [-90, 90]");
    if (!v.is_room() && !(v.distance > 0.0)) throw std::invalid_argument("object viewpoint needs distance > 0");

    Camera cam;
    cam.intrinsics = k;
    cam.eye = v.eye();
    const Vec3 to_target = v.look_at - cam.eye;
    if (!(to_target.norm() > 0.0)) throw std::invalid_argument("camera position coincides with look_at");
    const Vec3 f = to_target.normalized();
    const Vec3 s = f.cross(v.up_hint()).normalized();
    const Vec3 u = s.cross(f);
    cam.forward = f;

    cam.view.setIdentity();
    cam.view.block<1, 3>(0, 0) = s.transpose();
    cam.view.block<1, 3>(1, 0) = u.transpose();
    cam.view.block<1, 3>(2, 0) = -f.transpose();
    cam.view(0, 3) = -s.dot(cam.eye);
    cam.view(1, 3) = -u.dot(cam.eye);
    cam.view(2, 3) = f.dot(cam.eye);

    const double focal = 1.0 / std::tan(radians(k.fov_y_degrees) / 2.0);
    const double n = k.near_plane;
    const double fa = k.far_plane;
    cam.projection.setZero();
    cam.projection(0, 0) = focal / k.aspect();
    cam.projection(1, 1) = focal;
    cam.projection(2, 2) = -fa / (fa - n);
    cam.projection(2, 3) = -fa * n / (fa - n);
    cam.projection(3, 2) = -1.0;
    return cam;
}

std::vector<Viewpoint> object_viewpoints(double azimuth_step) {
    std::vector<Viewpoint> views;
    const int n = ring_count(azimuth_step);
    for (int i = 0; i < n; ++i) {
        views.push_back({i * azimuth_step, kObjectElevation, kObjectDistance, Vec3::Zero(), ViewKind::ObjectOrbit});
    }
    views.push_back({0.0, 90.0, kObjectDistance, Vec3::Zero(), ViewKind::ObjectTop});
    views.push_back({0.0, -90.0, kObjectDistance, Vec3::Zero(), ViewKind::ObjectBottom});
    return views;
}

std::vector<Viewpoint> room_viewpoints(double azimuth_step, Vec3 center) {
    std::vector<Viewpoint> views;
    const int n = ring_count(azimuth_step);
    for (int i = 0; i < n; ++i) {
        Viewpoint v{i * azimuth_step, 0.0, 0.0, Vec3::Zero(), ViewKind::RoomPano};
        v.look_at = center + v.direction();
        views.push_back(v);
    }
    Viewpoint up{0.0, 90.0, 0.0, center + Vec3(0, 1, 0), ViewKind::RoomUp};
    Viewpoint down{0.0, -90.0, 0.0, center + Vec3(0, -1, 0), ViewKind::RoomDown};
    views.push_back(up);
    views.push_back(down);
    return views;
}

std::vector<Viewpoint> eval_viewpoints(Vec3 center) {
    std::vector<Viewpoint> views;
    for (double el : {0.0, 20.0}) {
        for (int i = 0; i < 9; ++i) {
            Viewpoint v{i * 40.0, el, 0.0, Vec3::Zero(), ViewKind::RoomPano};
            v.look_at = center + v.direction();
            views.push_back(v);
        }
    }
    views.push_back({0.0, 90.0, 0.0, center + Vec3(0, 1, 0), ViewKind::RoomUp});
    views.push_back({0.0, -90.0, 0.0, center + Vec3(0, -1, 0), ViewKind::RoomDown});
    return views;
}

nlohmann::json to_json(const Viewpoint& v) {
    const Vec3 eye = v.eye();
    return {{"kind", std::string(to_string(v.kind))},
            {"azimuth", v.azimuth},
            {"elevation", v.elevation},
            {"distance", v.distance},
            {"look_at", {v.look_at.x(), v.look_at.y(), v.look_at.z()}},
            {"eye", {eye.x(), eye.y(), eye.z()}}};
}

nlohmann::json schedule_json(const std::vector<Viewpoint>& views) {
    auto out = nlohmann::json::array();
    for (const auto& v : views) out.push_back(to_json(v));
    return out;
}

}  // namespace instex
