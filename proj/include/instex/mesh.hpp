#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace instex {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Index3 = std::array<std::uint32_t, 3>;

/// Indexed triangle mesh with a separate UV index buffer, OBJ style, so that
/// seams (one position, several UVs) are represented without duplication.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Index3> triangles;
    std::vector<Vec2> uvs;
    std::vector<Index3> uv_triangles;  // parallel to `triangles`

    [[nodiscard]] bool empty() const { return triangles.empty(); }
    [[nodiscard]] std::size_t triangle_count() const { return triangles.size(); }
    [[nodiscard]] bool has_uvs() const { return !uvs.empty() && uv_triangles.size() == triangles.size(); }

    [[nodiscard]] std::array<Vec3, 3> corners(std::size_t tri) const {
        const auto& t = triangles[tri];
        return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
    }
    [[nodiscard]] std::array<Vec2, 3> uv_corners(std::size_t tri) const {
        const auto& t = uv_triangles[tri];
        return {uvs[t[0]], uvs[t[1]], uvs[t[2]]};
    }

    /// Geometric normal from counter-clockwise winding; zero for degenerates.
    [[nodiscard]] Vec3 face_normal(std::size_t tri) const;
    /// Area-weighted vertex normals.
    [[nodiscard]] std::vector<Vec3> vertex_normals() const;
};

struct BoundingBox {
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void extend(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    [[nodiscard]] bool valid() const { return (min.array() <= max.array()).all(); }
    [[nodiscard]] Vec3 center() const { return 0.5 * (min + max); }
    [[nodiscard]] Vec3 extents() const { return max - min; }
    [[nodiscard]] double diagonal() const { return valid() ? extents().norm() : 0.0; }
};

BoundingBox bounding_box(const Mesh& mesh);

inline constexpr double kDegenerateAreaTolerance = 1e-12;

struct MeshReport {
    std::size_t degenerate_dropped = 0;
    std::size_t uvs_clamped = 0;
    std::size_t non_manifold_edges = 0;

    [[nodiscard]] bool clean() const {
        return degenerate_dropped == 0 && uvs_clamped == 0 && non_manifold_edges == 0;
    }
};

/// Drops degenerate triangles and clamps UVs into [0,1] in place; counts
/// non-manifold edges without touching them.
MeshReport validate_mesh(Mesh& mesh);

/// Throws GeometryError on malformed input, missing UVs or non-finite data.
/// Dispatches on extension: .obj, .gltf, .glb.
/// The returned mesh has already been through validate_mesh; its report is
/// stored into `report` when given.
Mesh load_mesh(const std::filesystem::path& path, MeshReport* report = nullptr);
Mesh load_obj(const std::filesystem::path& path);
Mesh load_gltf(const std::filesystem::path& path);

/// Writes v/vt/f records; `material` adds a usemtl/mtllib pair when non-empty.
void save_obj(const Mesh& mesh, const std::filesystem::path& path, const std::string& material = {});

}  // namespace instex
