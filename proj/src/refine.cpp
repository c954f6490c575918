#include "instex/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "instex/errors.hpp"

namespace instex {

namespace {

void check_sizes(const TextureAtlas& atlas, const PositionMap& pmap, const Grid<std::uint8_t>* mask) {
    if (pmap.extent() != atlas.extent()) throw std::invalid_argument("refine: position map / atlas size mismatch");
    if (mask && mask->extent() != atlas.extent()) throw std::invalid_argument("refine: mask / atlas size mismatch");
}

SynthesisResponse uv_call(const TextureAtlas& atlas, const PositionMap& pmap, RegionMask regions,
                          const RefineParams& params, const DenoiseSpec& denoise, SynthesisBackend& backend) {
    SynthesisRequest req;
    req.mode = SynthesisMode::UvRefine;
    req.resolution = atlas.extent();
    req.init_image = atlas.color;
    req.position_map = pmap;
    req.region_mask = std::move(regions);
    req.prompt = params.prompt;
    req.style_image_id = params.style_image_id;
    req.seed = params.seed;
    req.denoise = denoise;
    return synthesize(req, backend);
}

void fill_report(RefineReport* report, const TextureAtlas& atlas, std::size_t masked, const SynthesisResponse* r) {
    if (!report) return;
    report->masked_texels = masked;
    const std::size_t valid = atlas.valid_count();
    report->masked_fraction = valid ? static_cast<double>(masked) / static_cast<double>(valid) : 0.0;
    report->backend_called = r != nullptr;
    report->latency_ms = r ? r->latency_ms : 0.0;
    report->retries = r ? r->retries : 0;
}

}  // namespace

PositionMap position_map(const Mesh& canonical_mesh, const TextureAtlas& atlas) {
    const BoundingBox box = bounding_box(canonical_mesh);
    const double limit = 0.5 + kCanonicalTolerance;
    if (!box.valid() || (box.min.array() < -limit).any() || (box.max.array() > limit).any()) {
        throw GeometryError("position_map: mesh is not canonical (bbox outside [-0.5,0.5]^3)");
    }
    PositionMap pmap{Grid<std::array<float, 3>>(atlas.extent(), {0.0f, 0.0f, 0.0f}),
                     Grid<std::uint8_t>(atlas.extent(), 0)};
    for (std::size_t i = 0; i < atlas.valid.size(); ++i) {
        if (!atlas.valid[i]) continue;
        const Vec3 p = texel_point(canonical_mesh, atlas.surface[i]);
        for (int c = 0; c < 3; ++c) pmap.position[i][c] = static_cast<float>(std::clamp(p[c] + 0.5, 0.0, 1.0));
        pmap.valid[i] = 1;
    }
    return pmap;
}

Grid<Rgb16> position_debug_image(const PositionMap& pmap) {
    Grid<Rgb16> out(pmap.extent(), Rgb16{0, 0, 0});
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            out[i][c] = static_cast<std::uint16_t>(std::lround(std::clamp(pmap.position[i][c], 0.0f, 1.0f) * 65535.0f));
        }
    }
    return out;
}

Grid<std::uint8_t> inpaint_mask(const TextureAtlas& atlas, double tau_refine) {
    Grid<std::uint8_t> mask(atlas.extent(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!atlas.valid[i]) continue;
        mask[i] = atlas.state[i] == TexelState::Unwritten || atlas.confidence[i] < tau_refine;
    }
    return mask;
}

std::size_t mask_count(const Grid<std::uint8_t>& mask) {
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

TextureAtlas refine_texture(const TextureAtlas& atlas, const PositionMap& pmap, const Grid<std::uint8_t>& mask,
                            const RefineParams& params, SynthesisBackend& backend, RefineReport* report) {
    check_sizes(atlas, pmap, &mask);
    std::size_t masked = 0;
    RegionMask regions{Grid<Region>(atlas.extent(), Region::Background)};
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!atlas.valid[i]) continue;
        if (mask[i]) {
            regions.region[i] = Region::Generate;
            ++masked;
        } else {
            regions.region[i] = Region::Keep;
        }
    }
    if (masked == 0) {
        fill_report(report, atlas, 0, nullptr);
        return atlas;
    }
    const SynthesisResponse response = uv_call(atlas, pmap, std::move(regions), params, params.denoise, backend);
    TextureAtlas out = atlas;
    const auto tau = static_cast<float>(params.tau_refine);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!atlas.valid[i] || !mask[i]) continue;
        out.color[i] = response.image[i];
        out.confidence[i] = std::max(out.confidence[i], tau);
        out.state[i] = TexelState::Kept;
    }
    dilate_gutter(out, kGutterRadius);
    fill_report(report, atlas, masked, &response);
    return out;
}

TextureAtlas postprocess_atlas(const TextureAtlas& atlas, const PositionMap& pmap, const RefineParams& params,
                               SynthesisBackend& backend, RefineReport* report) {
    check_sizes(atlas, pmap, nullptr);
    RegionMask regions{Grid<Region>(atlas.extent(), Region::Background)};
    std::size_t masked = 0;
    for (std::size_t i = 0; i < atlas.valid.size(); ++i) {
        if (!atlas.valid[i]) continue;
        regions.region[i] = Region::Update;
        ++masked;
    }
    if (masked == 0) {
        fill_report(report, atlas, 0, nullptr);
        return atlas;
    }
    const SynthesisResponse response = uv_call(atlas, pmap, std::move(regions), params, kPostprocessDenoise, backend);
    TextureAtlas out = atlas;
    for (std::size_t i = 0; i < atlas.valid.size(); ++i) {
        if (atlas.valid[i]) out.color[i] = response.image[i];
    }
    dilate_gutter(out, kGutterRadius);
    fill_report(report, atlas, masked, &response);
    return out;
}

}  // namespace instex
