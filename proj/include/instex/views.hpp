#pragma once

#include <string_view>
#include <vector>

#include <json.hpp>

#include "instex/grid.hpp"
#include "instex/mesh.hpp"

namespace instex {

enum class ViewKind { ObjectOrbit, ObjectTop, ObjectBottom, RoomPano, RoomUp, RoomDown };

std::string_view to_string(ViewKind kind);

/// Spherical camera pose, y-up. Object views orbit `look_at` at `distance`;
/// room views sit at the room center with distance 0 and look outward, so
/// `look_at` is center + unit direction.
struct Viewpoint {
    double azimuth = 0.0;    // degrees, [0, 360)
    double elevation = 0.0;  // degrees from the xz-plane, [-90, 90]
    double distance = 1.0;
    Vec3 look_at = Vec3::Zero();
    ViewKind kind = ViewKind::ObjectOrbit;

    [[nodiscard]] bool is_room() const {
        return kind == ViewKind::RoomPano || kind == ViewKind::RoomUp || kind == ViewKind::RoomDown;
    }
    /// d * (cos el * sin az, sin el, cos el * cos az).
    [[nodiscard]] Vec3 direction() const;
    [[nodiscard]] Vec3 eye() const;
    [[nodiscard]] Vec3 forward() const;
    /// Up hint for look-at: +y, or +z for straight up/down views.
    [[nodiscard]] Vec3 up_hint() const;
};

struct CameraIntrinsics {
    double fov_y_degrees = 60.0;
    Extent resolution{512, 512};
    double near_plane = 0.01;
    double far_plane = 10.0;

    [[nodiscard]] double aspect() const {
        return static_cast<double>(resolution.width) / static_cast<double>(resolution.height);
    }
};

using Mat4 = Eigen::Matrix4d;

/// Right-handed view matrix (camera looks down -z) plus a projection that
/// maps camera-space depth `near -> 0`, `far -> 1` in NDC z.
struct Camera {
    Mat4 view = Mat4::Identity();
    Mat4 projection = Mat4::Identity();
    Vec3 eye = Vec3::Zero();
    Vec3 forward = Vec3(0, 0, -1);
    CameraIntrinsics intrinsics;

    [[nodiscard]] Vec3 to_camera(const Vec3& world) const {
        return (view * world.homogeneous()).head<3>();
    }
    /// Continuous pixel position (x right, y down; pixel centers at +0.5) and
    /// camera-space depth along the view axis.
    struct Projected {
        Vec2 pixel;
        double depth = 0.0;
        double ndc_depth = 0.0;
    };
    [[nodiscard]] Projected project(const Vec3& world) const;
    /// Ray through a continuous pixel position, unit direction, world space.
    [[nodiscard]] Vec3 pixel_ray(const Vec2& pixel) const;
};

/// Throws std::invalid_argument when the viewpoint is malformed (eye equals
/// look_at, angles out of range, invalid intrinsics).
Camera camera_matrices(const Viewpoint& v, const CameraIntrinsics& k);

/// The object sweep: an azimuth ring (default 0..315 step 45, giving 10 views
/// in total) at elevation 15 and distance 1, then top, then bottom. Throws
/// std::invalid_argument when the step does not divide 360.
std::vector<Viewpoint> object_viewpoints(double azimuth_step = 45.0);

/// 360 / step panorama views at elevation 0, then up and down. Throws
/// std::invalid_argument when step does not divide 360.
std::vector<Viewpoint> room_viewpoints(double azimuth_step = 45.0, Vec3 center = Vec3::Zero());

/// The 20 scene evaluation views: 9 azimuths (step 40) at elevations 0 and
/// 20 from the room center, then up and down.
std::vector<Viewpoint> eval_viewpoints(Vec3 center = Vec3::Zero());

nlohmann::json to_json(const Viewpoint& v);
nlohmann::json schedule_json(const std::vector<Viewpoint>& views);

}  // namespace instex
