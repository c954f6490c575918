#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "instex/atlas.hpp"
#include "instex/mesh.hpp"

namespace instex {

/// Placement exactly as the scene manifest states it: world = R * (s .* local) + t.
struct ManifestTransform {
    Vec3 translation = Vec3::Zero();
    Vec3 scale = Vec3::Ones();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

    [[nodiscard]] Vec3 apply(const Vec3& local) const {
        return rotation * scale.cwiseProduct(local) + translation;
    }
};

enum class ObjectKind { Furniture, Room };

struct SceneObject {
    std::string id;
    std::string name;  // semantic name used in prompts ("coffee table")
    ObjectKind kind = ObjectKind::Furniture;
    std::filesystem::path mesh_path;
    ManifestTransform transform;
    Mesh mesh;  // world space
    MeshReport load_report;
    std::optional<TextureAtlas> atlas;
};

struct SceneGraph {
    std::vector<SceneObject> objects;
    std::vector<SceneObject> rooms;
    std::string style;
    std::string room_type = "living room";

    [[nodiscard]] std::size_t size() const { return objects.size() + rooms.size(); }
    /// All furniture followed by all rooms.
    [[nodiscard]] std::vector<const SceneObject*> all() const;
    [[nodiscard]] const SceneObject* find(const std::string& id) const;
};

/// Parses the JSON manifest, loads every referenced mesh (paths relative to the
/// manifest) and places it in world space. Throws ConfigError for malformed
/// manifests and GeometryError for mesh problems.
SceneGraph load_scene(const std::filesystem::path& manifest_path);

/// Throws ConfigError when object ids repeat or a scale is not positive.
void check_scene_invariants(const SceneGraph& scene);

}  // namespace instex
