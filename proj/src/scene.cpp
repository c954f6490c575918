#include "instex/scene.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "instex/errors.hpp"

namespace instex {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<const SceneObject*> SceneGraph::all() const {
    std::vector<const SceneObject*> out;
    out.reserve(size());
    for (const auto& o : objects) out.push_back(&o);
    for (const auto& r : rooms) out.push_back(&r);
    return out;
}

const SceneObject* SceneGraph::find(const std::string& id) const {
    for (const auto* o : all()) {
        if (o->id == id) return o;
    }
    return nullptr;
}

namespace {

Vec3 read_vec3(const json& j, const char* key, const Vec3& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (a.is_number()) return Vec3::Constant(a.get<double>());
    if (!a.is_array() || a.size() != 3) throw ConfigError(std::string("manifest: '") + key + "' must have 3 entries");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

SceneObject read_entry(const json& j, ObjectKind kind, const fs::path& base) {
    SceneObject o;
    o.kind = kind;
    if (!j.contains("id") || !j.at("id").is_string()) throw ConfigError("manifest: entry without string 'id'");
    o.id = j.at("id").get<std::string>();
    if (!j.contains("mesh_path")) throw ConfigError("manifest: entry '" + o.id + "' has no mesh_path");
    o.mesh_path = base / j.at("mesh_path").get<std::string>();
    o.name = j.value("name", kind == ObjectKind::Room ? std::string("room") : o.id);

    o.transform.translation = read_vec3(j, "translation", Vec3::Zero());
    o.transform.scale = read_vec3(j, "scale", Vec3::Ones());
    if (j.contains("rotation_quat")) {
        const auto& q = j.at("rotation_quat");
        if (!q.is_array() || q.size() != 4) throw ConfigError("manifest: rotation_quat must have 4 entries");
        // Stored as [w, x, y, z].
        Eigen::Quaterniond rot(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
        const double norm = rot.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw ConfigError("manifest: rotation_quat of '" + o.id + "' is zero");
        o.transform.rotation = rot.normalized();
    }
    if (!o.transform.translation.allFinite() || !o.transform.scale.allFinite()) {
        throw ConfigError("manifest: non-finite placement for '" + o.id + "'");
    }
    if ((o.transform.scale.array() <= 0.0).any()) {
        throw ConfigError("manifest: scale of '" + o.id + "' must be positive");
    }

    o.mesh = load_mesh(o.mesh_path, &o.load_report);
    for (auto& v : o.mesh.vertices) v = o.transform.apply(v);
    return o;
}

}  // namespace

void check_scene_invariants(const SceneGraph& scene) {
    std::set<std::string> ids;
    for (const auto* o : scene.all()) {
        if (!ids.insert(o->id).second) throw ConfigError("manifest: duplicate object id '" + o->id + "'");
        if ((o->transform.scale.array() <= 0.0).any()) {
            throw ConfigError("manifest: scale of '" + o->id + "' must be positive");
        }
    }
}

SceneGraph load_scene(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ConfigError("missing scene manifest: " + manifest_path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed scene manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("malformed scene manifest: top level must be an object");

    const fs::path base = manifest_path.parent_path();
    SceneGraph scene;
    try {
        scene.style = doc.value("style", std::string{});
        scene.room_type = doc.value("room_type", scene.room_type);
        for (const auto& j : doc.value("objects", json::array())) {
            scene.objects.push_back(read_entry(j, ObjectKind::Furniture, base));
        }
        for (const auto& j : doc.value("rooms", json::array())) {
            scene.rooms.push_back(read_entry(j, ObjectKind::Room, base));
        }
    } catch (const json::exception& e) {
        throw ConfigError("malformed scene manifest " + manifest_path.string() + ": " + e.what());
    }
    check_scene_invariants(scene);
    return scene;
}

}  // namespace instex
