#include "instex/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace instex {

std::size_t DepthMap::foreground_count() const {
    return static_cast<std::size_t>(std::count(foreground.begin(), foreground.end(), std::uint8_t{1}));
}

std::size_t CorrespondenceMap::visible_texel_count() const {
    return static_cast<std::size_t>(
        std::count_if(texels.begin(), texels.end(), [](const TexelVisibility& t) { return t.visible; }));
}

RasterBuffer::RasterBuffer(Extent extent)
    : depth{Grid<float>(extent, 0.0f), Grid<std::uint8_t>(extent, 0)}, fragments(extent) {}

namespace {

struct ClipVertex {
    Vec3 cam;   // camera space
    Vec3 bary;  // weights of the original triangle corners
};

// Screen-space vertex, y pointing up so counter-clockwise means positive area.
struct ScreenVertex {
    Vec2 p;
    double inv_depth;
    Vec3 bary;
};

double edge(const Vec2& a, const Vec2& b, const Vec2& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

bool is_top_left(const Vec2& a, const Vec2& b) {
    const double dx = b.x() - a.x();
    const double dy = b.y() - a.y();
    return dy < 0.0 || (dy == 0.0 && dx < 0.0);
}

// Sutherland-Hodgman against depth >= near (camera z <= -near).
int clip_near(const std::array<ClipVertex, 3>& in, double near_plane, std::array<ClipVertex, 4>& out) {
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        const ClipVertex& a = in[i];
        const ClipVertex& b = in[(i + 1) % 3];
        const double da = -a.cam.z() - near_plane;
        const double db = -b.cam.z() - near_plane;
        if (da >= 0.0) out[n++] = a;
        if ((da >= 0.0) != (db >= 0.0)) {
            const double t = da / (da - db);
            out[n++] = {a.cam + t * (b.cam - a.cam), a.bary + t * (b.bary - a.bary)};
        }
    }
    return n;
}

void raster_triangle(RasterBuffer& target, const std::array<ScreenVertex, 3>& tri, std::int32_t mesh_index,
                     std::int32_t triangle, double far_plane) {
    std::array<ScreenVertex, 3> v = tri;
    double area = edge(v[0].p, v[1].p, v[2].p);
    if (!(std::abs(area) > 0.0) || !std::isfinite(area)) return;
    if (area < 0.0) {
        std::swap(v[1], v[2]);
        area = -area;
    }
    const Extent ext = target.depth.extent();
    const double min_x = std::min({v[0].p.x(), v[1].p.x(), v[2].p.x()});
    const double max_x = std::max({v[0].p.x(), v[1].p.x(), v[2].p.x()});
    const double min_y = std::min({v[0].p.y(), v[1].p.y(), v[2].p.y()});
    const double max_y = std::max({v[0].p.y(), v[1].p.y(), v[2].p.y()});
    if (max_x < 0.0 || max_y < 0.0 || min_x > ext.width || min_y > ext.height) return;

    const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int x1 = std::min(ext.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    // Rows count downward: row r has its center at y_up = H - (r + 0.5).
    const int r0 = std::max(0, static_cast<int>(std::floor(ext.height - max_y - 0.5)));
    const int r1 = std::min(ext.height - 1, static_cast<int>(std::ceil(ext.height - min_y - 0.5)));

    const bool tl0 = is_top_left(v[1].p, v[2].p);
    const bool tl1 = is_top_left(v[2].p, v[0].p);
    const bool tl2 = is_top_left(v[0].p, v[1].p);

    for (int r = r0; r <= r1; ++r) {
        const double py = ext.height - (r + 0.5);
        for (int x = x0; x <= x1; ++x) {
            const Vec2 p(x + 0.5, py);
            const double w0 = edge(v[1].p, v[2].p, p);
            const double w1 = edge(v[2].p, v[0].p, p);
            const double w2 = edge(v[0].p, v[1].p, p);
            if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
            if ((w0 == 0.0 && !tl0) || (w1 == 0.0 && !tl1) || (w2 == 0.0 && !tl2)) continue;

            const double l0 = w0 / area;
            const double l1 = w1 / area;
            const double l2 = w2 / area;
            const double inv = l0 * v[0].inv_depth + l1 * v[1].inv_depth + l2 * v[2].inv_depth;
            if (!(inv > 0.0)) continue;
            const double depth = 1.0 / inv;
            if (depth > far_plane) continue;

            const std::size_t idx = target.depth.depth.index(x, r);
            const float d = static_cast<float>(depth);
            if (target.depth.foreground[idx] != 0 && !(d < target.depth.depth[idx])) continue;

            Vec3 bary = (l0 * v[0].inv_depth) * v[0].bary + (l1 * v[1].inv_depth) * v[1].bary +
                        (l2 * v[2].inv_depth) * v[2].bary;
            bary /= inv;
            target.depth.depth[idx] = d;
            target.depth.foreground[idx] = 1;
            target.fragments[idx] = {mesh_index, triangle, bary};
        }
    }
}

}  // namespace

bool passes_cull(const Mesh& mesh, std::size_t triangle, const Vec3& eye, CullMode cull) {
    const auto [a, b, c] = mesh.corners(triangle);
    const Vec3 n = (b - a).cross(c - a);
    if (!(n.squaredNorm() > 0.0)) return false;
    const double facing = n.dot(eye - a);
    switch (cull) {
        case CullMode::Back: return facing > 0.0;
        case CullMode::Front: return facing < 0.0;
        case CullMode::None: return facing != 0.0;
    }
    return false;
}

double view_cosine(const Mesh& mesh, std::size_t triangle, const Camera& camera, CullMode cull) {
    Vec3 n = mesh.face_normal(triangle);
    if (cull == CullMode::Front) {
        n = -n;
    } else if (cull == CullMode::None) {
        const auto corners = mesh.corners(triangle);
        if (n.dot(camera.eye - corners[0]) < 0.0) n = -n;
    }
    return std::max(0.0, n.dot(-camera.forward));
}

void rasterize_into(RasterBuffer& target, const Mesh& mesh, const Camera& camera, CullMode cull,
                    std::int32_t mesh_index) {
    const CameraIntrinsics& k = camera.intrinsics;
    const double focal = 1.0 / std::tan(k.fov_y_degrees * std::numbers::pi / 360.0);
    const double sx = focal / k.aspect();
    const double sy = focal;
    const Extent ext = target.depth.extent();

    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        if (!passes_cull(mesh, t, camera.eye, cull)) continue;
        const auto corners = mesh.corners(t);
        const std::array<ClipVertex, 3> in{ClipVertex{camera.to_camera(corners[0]), Vec3(1, 0, 0)},
                                           ClipVertex{camera.to_camera(corners[1]), Vec3(0, 1, 0)},
                                           ClipVertex{camera.to_camera(corners[2]), Vec3(0, 0, 1)}};
        std::array<ClipVertex, 4> clipped;
        const int n = clip_near(in, k.near_plane, clipped);
        if (n < 3) continue;

        std::array<ScreenVertex, 4> screen;
        for (int i = 0; i < n; ++i) {
            const double depth = -clipped[i].cam.z();
            const double ndc_x = sx * clipped[i].cam.x() / depth;
            const double ndc_y = sy * clipped[i].cam.y() / depth;
            screen[i] = {Vec2((ndc_x + 1.0) * 0.5 * ext.width, (ndc_y + 1.0) * 0.5 * ext.height), 1.0 / depth,
                         clipped[i].bary};
        }
        for (int i = 1; i + 1 < n; ++i) {
            raster_triangle(target, {screen[0], screen[i], screen[i + 1]}, mesh_index, static_cast<std::int32_t>(t),
                            k.far_plane);
        }
    }
}

RasterBuffer rasterize(const Mesh& mesh, const Camera& camera, CullMode cull) {
    RasterBuffer buffer(camera.intrinsics.resolution);
    rasterize_into(buffer, mesh, camera, cull, 0);
    return buffer;
}

DepthMap render_depth(const Mesh& mesh, const Camera& camera, CullMode cull) {
    return rasterize(mesh, camera, cull).depth;
}

namespace {

/// Whether a triangle rendered around pixel `q` crosses the segment from the
/// eye to `point` with axis depth below `max_depth`.
bool occluded_near(const Mesh& mesh, const RasterBuffer& raster, const Camera& camera, int qx, int qy,
                   std::int32_t own_triangle, const Vec3& point, double max_depth) {
    const Extent ext = raster.depth.extent();
    const Vec3 dir = (point - camera.eye).normalized();
    const double axis = dir.dot(camera.forward);
    std::int32_t seen[9];
    int seen_count = 0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            if (!ext.contains(qx + dx, qy + dy)) continue;
            const std::size_t idx = raster.depth.depth.index(qx + dx, qy + dy);
            if (raster.depth.foreground[idx] == 0) continue;
            const std::int32_t tri = raster.fragments[idx].triangle;
            if (tri < 0 || tri == own_triangle || std::find(seen, seen + seen_count, tri) != seen + seen_count) continue;
            seen[seen_count++] = tri;
            const auto [a, b, c] = mesh.corners(static_cast<std::size_t>(tri));
            const Vec3 e1 = b - a;
            const Vec3 e2 = c - a;
            const Vec3 p = dir.cross(e2);
            const double det = e1.dot(p);
            if (std::abs(det) < 1e-15) continue;
            const Vec3 s = camera.eye - a;
            const double u = s.dot(p) / det;
            if (u < 0.0 || u > 1.0) continue;
            const Vec3 q = s.cross(e1);
            const double v = dir.dot(q) / det;
            if (v < 0.0 || u + v > 1.0) continue;
            const double t = e2.dot(q) / det;
            if (t > 0.0 && t * axis < max_depth) return true;
        }
    }
    return false;
}

}  // namespace

std::int32_t fragment_texel(const Mesh& mesh, const TextureAtlas& atlas, const Fragment& fragment,
                            const Grid<std::uint8_t>* candidates) {
    if (fragment.triangle < 0 || !mesh.has_uvs()) return -1;
    const auto uv = mesh.uv_corners(static_cast<std::size_t>(fragment.triangle));
    const Vec2 p = fragment.barycentric.x() * uv[0] + fragment.barycentric.y() * uv[1] + fragment.barycentric.z() * uv[2];
    const auto texel = candidates ? nearest_marked_texel(atlas, *candidates, p, fragment.triangle, kFragmentTexelRings)
                                  : nearest_valid_texel(atlas, p, fragment.triangle, kFragmentTexelRings);
    return texel ? static_cast<std::int32_t>(*texel) : -1;
}

CorrespondenceMap texel_correspondence(const Mesh& mesh, const TextureAtlas& atlas, const Camera& camera,
                                       CullMode cull) {
    const RasterBuffer raster = rasterize(mesh, camera, cull);
    const Extent image = camera.intrinsics.resolution;
    const Extent atlas_ext = atlas.extent();

    CorrespondenceMap corr;
    corr.image = image;
    corr.atlas = atlas_ext;
    corr.pixels = Grid<PixelSample>(image);
    corr.texels = Grid<TexelVisibility>(atlas_ext);
    corr.depth = raster.depth;

    std::vector<double> tri_cosine(mesh.triangle_count(), -1.0);
    auto cosine_of = [&](std::int32_t tri) {
        auto& c = tri_cosine[static_cast<std::size_t>(tri)];
        if (c < 0.0) c = view_cosine(mesh, static_cast<std::size_t>(tri), camera, cull);
        return c;
    };

    // Texel pass: which texel centers this view can see at all.
    const double eps = kOcclusionEpsilonScale * bounding_box(mesh).diagonal();
    const double near_plane = camera.intrinsics.near_plane;
    const double far_plane = camera.intrinsics.far_plane;
    std::vector<Vec2> projected(atlas_ext.area(), Vec2::Zero());
    Grid<std::uint8_t> candidate(atlas_ext, 0);
    for (std::size_t i = 0; i < atlas_ext.area(); ++i) {
        if (atlas.valid[i] == 0) continue;
        const std::int32_t tri = atlas.surface[i].triangle;
        if (!passes_cull(mesh, static_cast<std::size_t>(tri), camera.eye, cull)) continue;
        if (!(cosine_of(tri) > 0.0)) continue;
        const Vec3 point = texel_point(mesh, atlas.surface[i]);
        const auto proj = camera.project(point);
        projected[i] = proj.pixel;
        if (proj.depth < near_plane || proj.depth > far_plane) continue;
        const int qx = static_cast<int>(std::floor(proj.pixel.x()));
        const int qy = static_cast<int>(std::floor(proj.pixel.y()));
        if (image.contains(qx, qy) && occluded_near(mesh, raster, camera, qx, qy, tri, point, proj.depth - eps)) continue;
        candidate[i] = 1;
    }

    // Pixel pass: sampled texel per pixel, and for every sampled texel the
    // sampling pixel closest to its projected center.
    std::vector<std::int32_t> nearest_sampler(atlas_ext.area(), -1);
    std::vector<double> nearest_d2(atlas_ext.area(), std::numeric_limits<double>::infinity());
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const std::size_t idx = corr.pixels.index(x, y);
            if (raster.depth.foreground[idx] == 0) continue;
            const Fragment& frag = raster.fragments[idx];
            PixelSample& s = corr.pixels[idx];
            s.triangle = frag.triangle;
            s.depth = raster.depth.depth[idx];
            s.cosine = static_cast<float>(cosine_of(frag.triangle));
            s.texel = fragment_texel(mesh, atlas, frag, &candidate);
            if (s.texel < 0) continue;
            const auto t = static_cast<std::size_t>(s.texel);
            const double d2 = (Vec2(x + 0.5, y + 0.5) - projected[t]).squaredNorm();
            if (d2 < nearest_d2[t]) {
                nearest_d2[t] = d2;
                nearest_sampler[t] = static_cast<std::int32_t>(idx);
            }
        }
    }

    for (std::size_t i = 0; i < atlas_ext.area(); ++i) {
        if (candidate[i] == 0) continue;
        const auto cosine = static_cast<float>(cosine_of(atlas.surface[i].triangle));
        TexelVisibility& vis = corr.texels[i];
        if (nearest_sampler[i] >= 0) {
            vis = {nearest_sampler[i], cosine, true};
            continue;
        }
        const int qx = static_cast<int>(std::floor(projected[i].x()));
        const int qy = static_cast<int>(std::floor(projected[i].y()));
        if (!image.contains(qx, qy)) continue;
        const std::size_t q = corr.pixels.index(qx, qy);
        if (raster.depth.foreground[q] != 0) vis = {static_cast<std::int32_t>(q), cosine, true};
    }
    return corr;
}

ColorRender render_color(const Mesh& mesh, const TextureAtlas& atlas, const Camera& camera, CullMode cull) {
    const SceneItem item{&mesh, &atlas, cull};
    return render_scene_color(std::span<const SceneItem>(&item, 1), camera);
}

ColorRender render_scene_color(std::span<const SceneItem> items, const Camera& camera) {
    const Extent ext = camera.intrinsics.resolution;
    RasterBuffer raster(ext);
    for (std::size_t m = 0; m < items.size(); ++m) {
        rasterize_into(raster, *items[m].mesh, camera, items[m].cull, static_cast<std::int32_t>(m));
    }
    ColorRender out{RgbImage(ext, kBlack), Grid<TexelState>(ext, TexelState::Unwritten), raster.depth.foreground};
    for (std::size_t i = 0; i < ext.area(); ++i) {
        if (raster.depth.foreground[i] == 0) continue;
        const Fragment& frag = raster.fragments[i];
        const SceneItem& item = items[static_cast<std::size_t>(frag.mesh)];
        const std::int32_t texel = fragment_texel(*item.mesh, *item.atlas, frag);
        if (texel < 0) {
            out.image[i] = kSentinelMagenta;
            continue;
        }
        const auto t = static_cast<std::size_t>(texel);
        const TexelState s = item.atlas->state[t];
        out.state[i] = s;
        out.image[i] = s == TexelState::Unwritten ? kSentinelMagenta : item.atlas->color[t];
    }
    return out;
}

Grid<std::uint16_t> depth_debug_image(const DepthMap& depth, const CameraIntrinsics& k) {
    Grid<std::uint16_t> out(depth.extent(), 0);
    const double span = k.far_plane - k.near_plane;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (depth.foreground[i] == 0) continue;
        const double t = std::clamp((depth.depth[i] - k.near_plane) / span, 0.0, 1.0);
        out[i] = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    }
    return out;
}

}  // namespace instex
