#include <doctest.h>

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "instex/base64.hpp"
#include "instex/errors.hpp"
#include "instex/mesh.hpp"
#include "instex/scene.hpp"
#include "testkit.hpp"

using namespace instex;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("obj loader triangulates, resolves negative indices, keeps seams") {
    const fs::path dir = testkit::temp_dir("obj");
    write(dir / "q.obj",
          "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
          "f -4/-4 -3/-3 -2/-2 -1/-1\n");
    MeshReport report;
    const Mesh m = load_mesh(dir / "q.obj", &report);
    REQUIRE(m.triangle_count() == 2);
    CHECK(m.triangles[0] == Index3{0, 1, 2});
    CHECK(m.triangles[1] == Index3{0, 2, 3});
    CHECK(report.clean());

    const Mesh cube = testkit::seamed_cube();
    save_obj(cube, dir / "c.obj");
    const Mesh back = load_mesh(dir / "c.obj");
    CHECK(back.vertices.size() == 8);
    CHECK(back.uvs.size() == cube.uvs.size());
    CHECK(back.triangles == cube.triangles);
    CHECK(back.uv_triangles == cube.uv_triangles);
}

TEST_CASE("mesh validation reports and repairs") {
    const fs::path dir = testkit::temp_dir("obj_bad");
    write(dir / "nouv.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    CHECK_THROWS_AS(load_mesh(dir / "nouv.obj"), GeometryError);
    write(dir / "range.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 9/1\n");
    CHECK_THROWS_AS(load_mesh(dir / "range.obj"), GeometryError);
    CHECK_THROWS_AS(load_mesh(dir / "absent.obj"), GeometryError);
    write(dir / "x.ply", "ply\n");
    CHECK_THROWS_AS(load_mesh(dir / "x.ply"), GeometryError);

    write(dir / "degen.obj",
          "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nvt 0 0\nvt 1.5 0\nvt 0 1\nf 1/1 2/2 3/3\nf 1/1 2/1 4/1\n");
    MeshReport report;
    const Mesh m = load_mesh(dir / "degen.obj", &report);
    CHECK(m.triangle_count() == 1);
    CHECK(report.degenerate_dropped == 1);
    CHECK(report.uvs_clamped == 1);
    CHECK(m.uvs[1].x() == 1.0);
}

TEST_CASE("gltf loader reads embedded buffers and flips v") {
    const fs::path dir = testkit::temp_dir("gltf");
    const float positions[9] = {0, 0, 0, 1, 0, 0, 0, 1, 0};
    const float uvs[6] = {0, 0, 1, 0, 0, 0.25f};
    const std::uint16_t idx[3] = {0, 1, 2};
    std::vector<std::uint8_t> buffer(sizeof(positions) + sizeof(uvs) + sizeof(idx));
    std::memcpy(buffer.data(), positions, sizeof(positions));
    std::memcpy(buffer.data() + 36, uvs, sizeof(uvs));
    std::memcpy(buffer.data() + 60, idx, sizeof(idx));
    nlohmann::json g = {
        {"asset", {{"version", "2.0"}}},
        {"buffers", {{{"byteLength", buffer.size()}, {"uri", "data:application/octet-stream;base64," + base64_encode(buffer)}}}},
        {"bufferViews", {{{"buffer", 0}, {"byteOffset", 0}, {"byteLength", 36}},
                         {{"buffer", 0}, {"byteOffset", 36}, {"byteLength", 24}},
                         {{"buffer", 0}, {"byteOffset", 60}, {"byteLength", 6}}}},
        {"accessors", {{{"bufferView", 0}, {"componentType", 5126}, {"count", 3}, {"type", "VEC3"}},
                       {{"bufferView", 1}, {"componentType", 5126}, {"count", 3}, {"type", "VEC2"}},
                       {{"bufferView", 2}, {"componentType", 5123}, {"count", 3}, {"type", "SCALAR"}}}},
        {"meshes", {{{"primitives", {{{"attributes", {{"POSITION", 0}, {"TEXCOORD_0", 1}}}, {"indices", 2}}}}}}},
    };
    write(dir / "t.gltf", g.dump());
    const Mesh m = load_mesh(dir / "t.gltf");
    REQUIRE(m.triangle_count() == 1);
    CHECK(m.vertices[1].x() == doctest::Approx(1.0));
    CHECK(m.uvs[2].y() == doctest::Approx(0.75));
    CHECK(m.uvs[0].y() == doctest::Approx(1.0));
}

TEST_CASE("scene manifest loading places meshes in world space") {
    const fs::path dir = testkit::temp_dir("scene");
    const fs::path manifest = testkit::write_demo_scene(dir);
    const SceneGraph scene = load_scene(manifest);
    CHECK(scene.objects.size() == 4);
    CHECK(scene.rooms.size() == 1);
    CHECK(scene.style == "Baroque");
    CHECK(scene.room_type == "living room");
    const SceneObject* table = scene.find("table");
    REQUIRE(table != nullptr);
    CHECK(table->name == "coffee table");
    const BoundingBox box = bounding_box(table->mesh);
    CHECK(box.min.x() == doctest::Approx(0.8 - 0.45));
    CHECK(box.max.y() == doctest::Approx(0.5));
    CHECK(scene.find("nope") == nullptr);
    CHECK(scene.all().back()->kind == ObjectKind::Room);
}

TEST_CASE("scene manifest errors") {
    const fs::path dir = testkit::temp_dir("scene_bad");
    testkit::write_demo_scene(dir);
    CHECK_THROWS_AS(load_scene(dir / "missing.json"), ConfigError);
    write(dir / "garbage.json", "{not json");
    CHECK_THROWS_AS(load_scene(dir / "garbage.json"), ConfigError);
    write(dir / "dup.json",
          R"({"objects":[{"id":"a","mesh_path":"cube.obj"},{"id":"a","mesh_path":"cube.obj"}]})");
    CHECK_THROWS_AS(load_scene(dir / "dup.json"), ConfigError);
    write(dir / "scale.json", R"({"objects":[{"id":"a","mesh_path":"cube.obj","scale":[1,0,1]}]})");
    CHECK_THROWS_AS(load_scene(dir / "scale.json"), ConfigError);
    write(dir / "mesh.json", R"({"objects":[{"id":"a","mesh_path":"nothing.obj"}]})");
    CHECK_THROWS_AS(load_scene(dir / "mesh.json"), GeometryError);
}
