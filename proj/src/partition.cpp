#include "instex/partition.hpp"

#include <stdexcept>

namespace instex {

std::string_view to_string(Region region) {
    switch (region) {
        case Region::Background: return "background";
        case Region::Generate: return "generate";
        case Region::Update: return "update";
        case Region::Keep: return "keep";
    }
    return "?";
}

RegionCounts RegionMask::counts() const {
    RegionCounts c;
    for (Region r : region) {
        switch (r) {
            case Region::Background: ++c.background; break;
            case Region::Generate: ++c.generate; break;
            case Region::Update: ++c.update; break;
            case Region::Keep: ++c.keep; break;
        }
    }
    return c;
}

RegionMask classify_view(const TextureAtlas& atlas, const CorrespondenceMap& corr, const PartitionPolicy& policy) {
    if (corr.atlas != atlas.extent()) throw std::invalid_argument("classify_view: atlas resolution mismatch");
    const Extent ext = corr.image;
    RegionMask mask{Grid<Region>(ext, Region::Background)};

    for (std::size_t i = 0; i < ext.area(); ++i) {
        if (corr.depth.foreground[i] == 0) continue;
        const PixelSample& s = corr.pixels[i];
        if (s.texel < 0) {
            mask.region[i] = Region::Generate;
            continue;
        }
        const auto t = static_cast<std::size_t>(s.texel);
        if (atlas.state[t] == TexelState::Unwritten) {
            mask.region[i] = Region::Generate;
        } else if (const TexelVisibility& vis = corr.texels[t];
                   atlas.confidence[t] < policy.update_threshold &&
                   (vis.visible ? vis.cosine : s.cosine) > policy.update_threshold) {
            mask.region[i] = Region::Update;
        } else {
            mask.region[i] = Region::Keep;
        }
    }

    const int r = policy.generate_dilation;
    if (r <= 0) return mask;
    // Square (Chebyshev) dilation of GENERATE, applied to KEEP pixels only.
    const Grid<Region> before = mask.region;
    for (int y = 0; y < ext.height; ++y) {
        for (int x = 0; x < ext.width; ++x) {
            if (before(x, y) != Region::Keep) continue;
            bool near_generate = false;
            for (int dy = -r; dy <= r && !near_generate; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (ext.contains(nx, ny) && before(nx, ny) == Region::Generate) {
                        near_generate = true;
                        break;
                    }
                }
            }
            if (near_generate) mask.region(x, y) = Region::Update;
        }
    }
    return mask;
}

DenoiseSpec denoise_policy(Region region, const PartitionPolicy& policy) {
    switch (region) {
        case Region::Generate: return {policy.generate_steps, 1.0};
        case Region::Update: {
            const double strength = policy.generate_steps > 0
                                        ? static_cast<double>(policy.update_steps) / policy.generate_steps
                                        : 0.0;
            return {policy.update_steps, strength};
        }
        case Region::Keep: return {0, 0.0};
        case Region::Background: break;
    }
    throw std::invalid_argument("denoise_policy: background has no denoise budget");
}

Grid<std::uint8_t> region_debug_image(const RegionMask& mask) {
    Grid<std::uint8_t> out(mask.extent(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (mask.region[i]) {
            case Region::Background: out[i] = 0; break;
            case Region::Generate: out[i] = 255; break;
            case Region::Update: out[i] = 128; break;
            case Region::Keep: out[i] = 64; break;
        }
    }
    return out;
}

Region region_from_gray(std::uint8_t gray) {
    if (gray >= 192) return Region::Generate;
    if (gray >= 96) return Region::Update;
    if (gray >= 32) return Region::Keep;
    return Region::Background;
}

}  // namespace instex
