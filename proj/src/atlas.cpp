#include "instex/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace instex {

std::string_view to_string(TexelState state) {
    switch (state) {
        case TexelState::Unwritten: return "unwritten";
        case TexelState::Generated: return "generated";
        case TexelState::Updated: return "updated";
        case TexelState::Kept: return "kept";
    }
    return "?";
}

bool is_legal_transition(TexelState from, TexelState to) {
    if (from == to) return true;
    switch (from) {
        case TexelState::Unwritten: return to == TexelState::Generated;
        case TexelState::Generated: return to == TexelState::Updated || to == TexelState::Kept;
        case TexelState::Updated: return to == TexelState::Kept;
        case TexelState::Kept: return false;
    }
    return false;
}

std::size_t TextureAtlas::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

std::size_t TextureAtlas::count_state(TexelState s, bool valid_only) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (state[i] == s && (!valid_only || valid[i] != 0)) ++n;
    }
    return n;
}

namespace {

double edge(const Vec2& a, const Vec2& b, const Vec2& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

}  // namespace

TextureAtlas new_atlas(const Mesh& mesh, Extent resolution) {
    if (resolution.height < 1 || resolution.width < 1) {
        throw std::invalid_argument("atlas resolution must be at least 1x1");
    }
    TextureAtlas atlas;
    atlas.color = Grid<Rgb8>(resolution, kSentinelMagenta);
    atlas.state = Grid<TexelState>(resolution, TexelState::Unwritten);
    atlas.confidence = Grid<float>(resolution, 0.0f);
    atlas.valid = Grid<std::uint8_t>(resolution, 0);
    atlas.gutter = Grid<std::uint8_t>(resolution, 0);
    atlas.surface = Grid<TexelSurface>(resolution);
    if (!mesh.has_uvs()) return atlas;

    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto uv = mesh.uv_corners(t);
        const std::array<Vec2, 3> p{uv_to_texel_space(uv[0], resolution), uv_to_texel_space(uv[1], resolution),
                                    uv_to_texel_space(uv[2], resolution)};
        const double area = edge(p[0], p[1], p[2]);
        if (area == 0.0) continue;
        const double sign = area > 0.0 ? 1.0 : -1.0;

        const double min_x = std::min({p[0].x(), p[1].x(), p[2].x()});
        const double max_x = std::max({p[0].x(), p[1].x(), p[2].x()});
        const double min_y = std::min({p[0].y(), p[1].y(), p[2].y()});
        const double max_y = std::max({p[0].y(), p[1].y(), p[2].y()});
        const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
        const int x1 = std::min(resolution.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
        const int y1 = std::min(resolution.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));

        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (atlas.valid(x, y) != 0) continue;
                const Vec2 c(x + 0.5, y + 0.5);
                const double w0 = sign * edge(p[1], p[2], c);
                const double w1 = sign * edge(p[2], p[0], c);
                const double w2 = sign * edge(p[0], p[1], c);
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double sum = w0 + w1 + w2;
                atlas.valid(x, y) = 1;
                atlas.surface(x, y) = {static_cast<std::int32_t>(t), Vec3(w0 / sum, w1 / sum, w2 / sum)};
            }
        }
    }
    return atlas;
}

std::optional<std::size_t> nearest_valid_texel(const TextureAtlas& atlas, const Vec2& uv,
                                               std::int32_t prefer_triangle, int max_rings) {
    return nearest_marked_texel(atlas, atlas.valid, uv, prefer_triangle, max_rings);
}

std::optional<std::size_t> nearest_marked_texel(const TextureAtlas& atlas, const Grid<std::uint8_t>& marks,
                                                const Vec2& uv, std::int32_t prefer_triangle, int max_rings) {
    const Extent ext = atlas.extent();
    const Vec2 p = uv_to_texel_space(uv, ext);
    const int cx = std::clamp(static_cast<int>(std::floor(p.x())), 0, ext.width - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(p.y())), 0, ext.height - 1);
    if (marks(cx, cy) != 0) return atlas.valid.index(cx, cy);

    for (int ring = 1; ring <= max_rings; ++ring) {
        std::optional<std::size_t> best;
        bool best_preferred = false;
        double best_d2 = 0.0;
        for (int dy = -ring; dy <= ring; ++dy) {
            for (int dx = -ring; dx <= ring; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                const int x = cx + dx;
                const int y = cy + dy;
                if (!ext.contains(x, y) || marks(x, y) == 0) continue;
                const bool preferred = prefer_triangle >= 0 && atlas.surface(x, y).triangle == prefer_triangle;
                const double d2 = (Vec2(x + 0.5, y + 0.5) - p).squaredNorm();
                const bool better = !best || (preferred && !best_preferred) ||
                                    (preferred == best_preferred && d2 < best_d2);
                if (better) {
                    best = atlas.valid.index(x, y);
                    best_preferred = preferred;
                    best_d2 = d2;
                }
            }
        }
        if (best) return best;
    }
    return std::nullopt;
}

Vec3 texel_point(const Mesh& mesh, const TexelSurface& s) {
    const auto [a, b, c] = mesh.corners(static_cast<std::size_t>(s.triangle));
    return s.barycentric.x() * a + s.barycentric.y() * b + s.barycentric.z() * c;
}

void dilate_gutter(TextureAtlas& atlas, int radius) {
    const Extent ext = atlas.extent();
    atlas.gutter.fill(0);
    Grid<std::uint8_t> filled(ext, 0);
    for (std::size_t i = 0; i < filled.size(); ++i) {
        filled[i] = (atlas.valid[i] != 0 && atlas.state[i] != TexelState::Unwritten) ? 1 : 0;
    }
    for (int ring = 0; ring < radius; ++ring) {
        Grid<std::uint8_t> next = filled;
        for (int y = 0; y < ext.height; ++y) {
            for (int x = 0; x < ext.width; ++x) {
                if (filled(x, y) != 0 || atlas.valid(x, y) != 0) continue;
                // First filled neighbor in scan order supplies the color.
                for (int dy = -1; dy <= 1 && next(x, y) == 0; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if (!ext.contains(nx, ny) || filled(nx, ny) == 0) continue;
                        atlas.color(x, y) = atlas.color(nx, ny);
                        atlas.gutter(x, y) = 1;
                        next(x, y) = 1;
                        break;
                    }
                }
            }
        }
        filled = std::move(next);
    }
}

bool atlas_invariants_hold(const TextureAtlas& atlas) {
    for (std::size_t i = 0; i < atlas.state.size(); ++i) {
        const float c = atlas.confidence[i];
        if (!(c >= 0.0f && c <= 1.0f)) return false;
        if ((atlas.state[i] == TexelState::Unwritten) != (c == 0.0f)) return false;
    }
    return true;
}

Grid<std::uint8_t> state_image(const TextureAtlas& atlas) {
    Grid<std::uint8_t> out(atlas.extent(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(85 * static_cast<int>(atlas.state[i]));
    return out;
}

TexelState state_from_gray(std::uint8_t gray) {
    const int level = (gray + 42) / 85;
    return static_cast<TexelState>(std::clamp(level, 0, 3));
}

}  // namespace instex
