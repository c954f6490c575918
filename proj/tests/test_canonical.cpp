#include <doctest.h>

#include <random>

#include "instex/canonical.hpp"
#include "instex/errors.hpp"
#include "testkit.hpp"

using namespace instex;

namespace {

Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

TEST_CASE("canonical meshes fit the unit cube centered at the origin") {
    Mesh m = testkit::translated(testkit::uv_sphere(2.0), Vec3(3, -1, 7));
    const CanonicalMesh c = canonicalize(m);
    const BoundingBox box = bounding_box(c.mesh);
    CHECK(box.center().norm() < 1e-12);
    CHECK(box.extents().maxCoeff() == doctest::Approx(1.0));
    CHECK(c.placement.scale == doctest::Approx(4.0));
    CHECK((c.placement.translation - Vec3(3, -1, 7)).norm() < 1e-12);
}

TEST_CASE("canonicalization round trip on fuzzed meshes") {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> coord(-50.0, 50.0);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        Mesh m;
        const int n = 3 + static_cast<int>(rng() % 30);
        const double s = scale(rng);
        const Vec3 offset(coord(rng), coord(rng), coord(rng));
        for (int i = 0; i < n; ++i) m.vertices.push_back(s * Vec3(coord(rng), coord(rng), coord(rng)) / 50.0 + offset);
        for (int i = 0; i + 2 < n; ++i) m.triangles.push_back({0, static_cast<std::uint32_t>(i + 1), static_cast<std::uint32_t>(i + 2)});
        const Eigen::Quaterniond rot = random_rotation(rng);
        const CanonicalMesh c = canonicalize(m, rot);
        Mesh back = c.mesh;
        for (Vec3& v : back.vertices) v = c.placement.to_world(v);
        worst = std::max(worst, max_relative_vertex_error(back, m));
        const BoundingBox box = bounding_box(c.mesh);
        CHECK(box.extents().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(box.min.minCoeff() >= -0.5 - 1e-9);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("canonicalization errors") {
    CHECK_THROWS_AS(canonicalize(Mesh{}), GeometryError);
    Mesh point;
    point.vertices = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
    point.triangles = {{0, 1, 2}};
    CHECK_THROWS_AS(canonicalize(point), GeometryError);
}

TEST_CASE("recompose restores world meshes and needs every object") {
    const auto dir = testkit::temp_dir("recompose");
    const SceneGraph scene = load_scene(testkit::write_demo_scene(dir));
    std::map<std::string, TexturedObject> textured;
    for (const SceneObject* obj : scene.all()) {
        const CanonicalMesh c = canonicalize(obj->mesh, obj->transform.rotation);
        textured[obj->id] = {c.mesh, c.placement, new_atlas(c.mesh, {8, 8})};
    }
    const SceneGraph back = recompose(scene, textured);
    for (const SceneObject* obj : back.all()) {
        CHECK(obj->atlas.has_value());
        CHECK(max_relative_vertex_error(obj->mesh, scene.find(obj->id)->mesh) <= 1e-9);
    }
    textured.erase("lamp");
    CHECK_THROWS_WITH_AS(recompose(scene, textured), doctest::Contains("lamp"), GeometryError);
}
