#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "instex/grid.hpp"
#include "instex/mesh.hpp"

namespace instex {

enum class TexelState : std::uint8_t { Unwritten = 0, Generated = 1, Updated = 2, Kept = 3 };

std::string_view to_string(TexelState state);

/// Whether `from -> to` is an allowed edge of the texel life cycle.
[[nodiscard]] bool is_legal_transition(TexelState from, TexelState to);

/// Which triangle a texel center falls in, with barycentric weights of the
/// triangle's corners. `triangle < 0` marks texels outside every UV chart.
struct TexelSurface {
    std::int32_t triangle = -1;
    Vec3 barycentric = Vec3::Zero();
};

/// The accumulating texture of one object. Texel (x, y) covers UV
/// [x/W, (x+1)/W] x [1-(y+1)/H, 1-y/H]: row 0 is the top (v = 1).
struct TextureAtlas {
    Grid<Rgb8> color;
    Grid<TexelState> state;
    Grid<float> confidence;
    Grid<std::uint8_t> valid;
    Grid<std::uint8_t> gutter;  // invalid texels filled by dilation
    Grid<TexelSurface> surface;

    [[nodiscard]] Extent extent() const { return color.extent(); }
    [[nodiscard]] std::size_t valid_count() const;
    [[nodiscard]] std::size_t count_state(TexelState s, bool valid_only = true) const;
};

inline constexpr Extent kDefaultAtlasExtent{1024, 1024};

/// Fresh atlas for `mesh`: every texel unwritten, confidence 0, and the valid
/// mask rasterized from the UV charts by texel-center sampling. Overlapping
/// charts resolve to the lowest triangle index. Throws std::invalid_argument on
/// a zero dimension.
TextureAtlas new_atlas(const Mesh& mesh, Extent resolution);

/// Continuous texel-space position of a UV coordinate (x right, y down).
[[nodiscard]] inline Vec2 uv_to_texel_space(const Vec2& uv, Extent extent) {
    return {uv.x() * extent.width, (1.0 - uv.y()) * extent.height};
}

/// Nearest valid texel to `uv`: the texel under `uv`, else the closest valid
/// texel in the first of the square rings 1..max_rings around it that has
/// one. Within a ring, texels of `prefer_triangle` win over others.
std::optional<std::size_t> nearest_valid_texel(const TextureAtlas& atlas, const Vec2& uv,
                                               std::int32_t prefer_triangle = -1, int max_rings = 1);
/// Same search over the texels where `marks` is nonzero.
std::optional<std::size_t> nearest_marked_texel(const TextureAtlas& atlas, const Grid<std::uint8_t>& marks,
                                                const Vec2& uv, std::int32_t prefer_triangle = -1, int max_rings = 1);

/// 3D point at a valid texel's center.
[[nodiscard]] Vec3 texel_point(const Mesh& mesh, const TexelSurface& s);

/// Copies colors of written valid texels into invalid neighbors, `radius`
/// rings deep (8-neighborhood per ring). Rebuilds the gutter mask.
void dilate_gutter(TextureAtlas& atlas, int radius);

inline constexpr int kGutterRadius = 2;

/// Atlas invariants: unwritten <=> zero confidence, confidence in [0,1].
[[nodiscard]] bool atlas_invariants_hold(const TextureAtlas& atlas);

/// Sidecar encoding of the state channel (unwritten 0, generated 85,
/// updated 170, kept 255).
Grid<std::uint8_t> state_image(const TextureAtlas& atlas);
TexelState state_from_gray(std::uint8_t gray);

}  // namespace instex
