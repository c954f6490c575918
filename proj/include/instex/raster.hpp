#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "instex/atlas.hpp"
#include "instex/grid.hpp"
#include "instex/mesh.hpp"
#include "instex/views.hpp"

namespace instex {

/// BACK drops faces pointing away from the camera (objects), FRONT drops
/// faces pointing at it (room shells seen from inside).
enum class CullMode { Back, Front, None };

/// `depth` is camera-space distance along the view axis; 0 marks background.
struct DepthMap {
    Grid<float> depth;
    Grid<std::uint8_t> foreground;

    [[nodiscard]] Extent extent() const { return depth.extent(); }
    [[nodiscard]] std::size_t foreground_count() const;
};

/// Front-most surface sample of a pixel. Barycentrics are perspective
/// correct and refer to the corners of the original (unclipped) triangle.
struct Fragment {
    std::int32_t mesh = -1;
    std::int32_t triangle = -1;
    Vec3 barycentric = Vec3::Zero();
};

struct RasterBuffer {
    DepthMap depth;
    Grid<Fragment> fragments;

    explicit RasterBuffer(Extent extent);
};

/// Z-buffers `mesh` into `target` with top-left fill and no multisampling.
/// Triangles are clipped against the near plane; fragments past the far
/// plane are discarded. Depth ties keep the earlier fragment.
void rasterize_into(RasterBuffer& target, const Mesh& mesh, const Camera& camera, CullMode cull,
                    std::int32_t mesh_index = 0);

RasterBuffer rasterize(const Mesh& mesh, const Camera& camera, CullMode cull);

DepthMap render_depth(const Mesh& mesh, const Camera& camera, CullMode cull);

/// Per-pixel view of the correspondence: which texel the pixel displays.
struct PixelSample {
    std::int32_t texel = -1;  // linear atlas index; -1 for background
    std::int32_t triangle = -1;
    float cosine = 0.0f;
    float depth = 0.0f;
};

/// Per-texel view: the single pixel this texel is projected through.
struct TexelVisibility {
    std::int32_t pixel = -1;  // linear image index
    float cosine = 0.0f;
    bool visible = false;
};

struct CorrespondenceMap {
    Extent image;
    Extent atlas;
    Grid<PixelSample> pixels;
    Grid<TexelVisibility> texels;
    DepthMap depth;

    [[nodiscard]] std::size_t visible_texel_count() const;
};

inline constexpr double kOcclusionEpsilonScale = 1e-3;

/// Cosine of a face with respect to the camera's viewing axis, with the
/// normal flipped for FRONT-culled (inward facing) renders. Clamped at 0.
[[nodiscard]] double view_cosine(const Mesh& mesh, std::size_t triangle, const Camera& camera, CullMode cull);

/// Whether `cull` would keep `triangle` for this camera.
[[nodiscard]] bool passes_cull(const Mesh& mesh, std::size_t triangle, const Vec3& eye, CullMode cull);

/// Links pixels and texels for one view.
///
/// A texel can be visible when it faces the camera with positive cosine and no
/// triangle rendered in the 3x3 pixels around its projection crosses the ray
/// to its center more than epsilon in front of it (epsilon is
/// kOcclusionEpsilonScale times the mesh bounding-box diagonal). Every
/// foreground pixel samples its nearest such texel. Texels no pixel samples
/// are visible only when they project onto a foreground pixel. Visible texels are routed through the
/// sampling pixel nearest their projection, or their projected pixel when no
/// pixel samples them.
CorrespondenceMap texel_correspondence(const Mesh& mesh, const TextureAtlas& atlas, const Camera& camera,
                                       CullMode cull = CullMode::Back);

inline constexpr int kFragmentTexelRings = 4;

/// Nearest valid texel of one fragment within kFragmentTexelRings rings (-1
/// when there is none). With `candidates`, only texels marked there count.
std::int32_t fragment_texel(const Mesh& mesh, const TextureAtlas& atlas, const Fragment& fragment,
                            const Grid<std::uint8_t>* candidates = nullptr);

struct ColorRender {
    RgbImage image;
    Grid<TexelState> state;
    Grid<std::uint8_t> foreground;
};

/// Nearest-texel render of the atlas. Unwritten texels show magenta,
/// background is black.
ColorRender render_color(const Mesh& mesh, const TextureAtlas& atlas, const Camera& camera,
                         CullMode cull = CullMode::Back);

struct SceneItem {
    const Mesh* mesh = nullptr;
    const TextureAtlas* atlas = nullptr;
    CullMode cull = CullMode::Back;
};

/// Shared z-buffer render of several textured meshes.
ColorRender render_scene_color(std::span<const SceneItem> items, const Camera& camera);

/// 16-bit debug depth: near -> 0, far -> 65535, background 0.
Grid<std::uint16_t> depth_debug_image(const DepthMap& depth, const CameraIntrinsics& k);

}  // namespace instex
