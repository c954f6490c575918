#pragma once

#include <map>
#include <string>

#include "instex/atlas.hpp"
#include "instex/mesh.hpp"
#include "instex/scene.hpp"

namespace instex {

/// Maps canonical space back to world space: world = R * (scale * p) + translation.
struct Placement {
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

    [[nodiscard]] Vec3 to_world(const Vec3& canonical) const {
        return rotation * (scale * canonical) + translation;
    }
    [[nodiscard]] Vec3 to_canonical(const Vec3& world) const {
        return rotation.conjugate() * (world - translation) / scale;
    }
};

struct CanonicalMesh {
    Mesh mesh;
    Placement placement;
};

/// Undoes the manifest rotation, then centers the bounding box at the origin
/// and scales uniformly so the largest extent is exactly 1. Throws
/// GeometryError for empty meshes or an all-zero bounding box.
CanonicalMesh canonicalize(const Mesh& world_mesh,
                           const Eigen::Quaterniond& rotation = Eigen::Quaterniond::Identity());

struct TexturedObject {
    Mesh canonical;
    Placement placement;
    TextureAtlas atlas;
};

/// Returns a copy of `scene` with every mesh rebuilt from its canonical
/// version and its atlas attached. Throws GeometryError naming the first
/// object without an entry.
SceneGraph recompose(const SceneGraph& scene, const std::map<std::string, TexturedObject>& textured);

/// Largest per-vertex distance between two meshes of equal topology, relative
/// to the bounding-box diagonal of `reference`.
double max_relative_vertex_error(const Mesh& mesh, const Mesh& reference);

}  // namespace instex
