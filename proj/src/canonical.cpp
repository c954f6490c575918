#include "instex/canonical.hpp"

#include <algorithm>

#include "instex/errors.hpp"

namespace instex {

CanonicalMesh canonicalize(const Mesh& world_mesh, const Eigen::Quaterniond& rotation) {
    if (world_mesh.vertices.empty() || world_mesh.empty()) throw GeometryError("canonicalize: empty mesh");

    const Eigen::Quaterniond inverse = rotation.conjugate();
    CanonicalMesh out;
    out.mesh = world_mesh;
    BoundingBox box;
    for (auto& v : out.mesh.vertices) {
        v = inverse * v;
        box.extend(v);
    }
    const Vec3 extent = box.extents();
    const double scale = extent.maxCoeff();
    if (!(scale > 0.0)) throw GeometryError("canonicalize: bounding box has zero extent");

    const Vec3 center = box.center();
    for (auto& v : out.mesh.vertices) v = (v - center) / scale;

    out.placement.rotation = rotation;
    out.placement.scale = scale;
    out.placement.translation = rotation * center;
    return out;
}

SceneGraph recompose(const SceneGraph& scene, const std::map<std::string, TexturedObject>& textured) {
    SceneGraph out = scene;
    auto restore = [&](SceneObject& o) {
        const auto it = textured.find(o.id);
        if (it == textured.end()) throw GeometryError("recompose: no textured entry for object '" + o.id + "'");
        const TexturedObject& t = it->second;
        o.mesh = t.canonical;
        for (auto& v : o.mesh.vertices) v = t.placement.to_world(v);
        o.atlas = t.atlas;
    };
    for (auto& o : out.objects) restore(o);
    for (auto& r : out.rooms) restore(r);
    return out;
}

double max_relative_vertex_error(const Mesh& mesh, const Mesh& reference) {
    if (mesh.vertices.size() != reference.vertices.size()) return std::numeric_limits<double>::infinity();
    const double diag = bounding_box(reference).diagonal();
    const double denom = diag > 0.0 ? diag : 1.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        worst = std::max(worst, (mesh.vertices[i] - reference.vertices[i]).norm() / denom);
    }
    return worst;
}

}  // namespace instex
