#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "instex/atlas.hpp"
#include "instex/mesh.hpp"
#include "instex/raster.hpp"
#include "instex/synthesis.hpp"
#include "instex/views.hpp"

namespace testkit {

using instex::Mesh;
using instex::Vec2;
using instex::Vec3;

// Fixtures. All are canonical (bbox within [-0.5,0.5]^3) unless scaled, wound
// counter-clockwise seen from outside.

/// Unit square in the z = 0 plane facing +z, UV covering [0,1]^2.
Mesh quad();
/// Cube with a connected cross-shaped UV net.
Mesh cube(double size = 1.0);
/// Cube with six separate UV islands in a 3x2 grid.
Mesh seamed_cube(double size = 1.0);
/// Latitude/longitude sphere: 20 segments x 9 bands = 320 triangles, seam at u = 0.
Mesh uv_sphere(double radius = 0.5, int segments = 20, int bands = 9);
/// Box with outward winding and island UVs, meant to be seen from inside.
Mesh room_shell(const Vec3& size = Vec3(1.0, 0.6, 0.8));

Mesh translated(Mesh mesh, const Vec3& offset);

/// Writes a 4 furniture + 1 room scene (meshes as OBJ plus manifest.json)
/// into `dir` and returns the manifest path.
std::filesystem::path write_demo_scene(const std::filesystem::path& dir);
/// Single-cube scene.
std::filesystem::path write_cube_scene(const std::filesystem::path& dir);

/// Fresh directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

// Oracles

struct RayHit {
    double t = 0.0;
    double z = 0.0;  // distance along the camera axis
    std::size_t triangle = 0;
};

/// Moller-Trumbore against every triangle that survives `cull`; nearest hit
/// with z in [near, far].
std::optional<RayHit> cast_ray(const Mesh& mesh, const instex::Camera& camera, const Vec3& origin, const Vec3& dir,
                               instex::CullMode cull, double edge_tolerance = 1e-9);

/// Depth image by casting one ray per pixel center. 0 = miss.
instex::Grid<float> raycast_depth(const Mesh& mesh, const instex::Camera& camera, instex::CullMode cull);

/// Visible texels whose center has a surface strictly in front of it (by more
/// than eps along the camera axis).
std::size_t occlusion_leaks(const Mesh& mesh, const instex::TextureAtlas& atlas, const instex::CorrespondenceMap& corr,
                            const instex::Camera& camera, instex::CullMode cull);

/// Valid mask by explicit area-coordinate tests at each texel center.
instex::Grid<std::uint8_t> valid_mask_oracle(const Mesh& mesh, instex::Extent extent);

/// Surface point under `uv` by the same area-coordinate test, first
/// containing triangle wins.
std::optional<Vec3> surface_point_oracle(const Mesh& mesh, const Vec2& uv);

/// Backend that ignores the request and paints every pixel one color.
class PaintEverywhereBackend final : public instex::SynthesisBackend {
public:
    explicit PaintEverywhereBackend(instex::Rgb8 color = {7, 200, 33}) : color_(color) {}
    [[nodiscard]] std::string id() const override { return "paint-everywhere"; }
    instex::SynthesisResponse generate(const instex::SynthesisRequest& req) override;
    std::string register_style(const instex::RgbImage& image) override { return instex::content_id(image); }
    int calls = 0;

private:
    instex::Rgb8 color_;
};

/// Counts calls, forwards to the stub.
class CountingStub final : public instex::SynthesisBackend {
public:
    [[nodiscard]] std::string id() const override { return "counting-stub"; }
    instex::SynthesisResponse generate(const instex::SynthesisRequest& req) override;
    std::string register_style(const instex::RgbImage& image) override { return instex::content_id(image); }
    int calls = 0;
    std::vector<instex::SynthesisMode> modes;
};

}  // namespace testkit
