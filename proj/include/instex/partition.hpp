#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "instex/atlas.hpp"
#include "instex/grid.hpp"
#include "instex/raster.hpp"

namespace instex {

enum class Region : std::uint8_t { Background = 0, Generate = 1, Update = 2, Keep = 3 };

std::string_view to_string(Region region);

struct RegionCounts {
    std::size_t background = 0;
    std::size_t generate = 0;
    std::size_t update = 0;
    std::size_t keep = 0;

    [[nodiscard]] std::size_t foreground() const { return generate + update + keep; }
};

struct RegionMask {
    Grid<Region> region;

    [[nodiscard]] Extent extent() const { return region.extent(); }
    [[nodiscard]] RegionCounts counts() const;
};

/// Diffusion budget for one region: `strength` is the fraction of noise
/// injected into the init image.
struct DenoiseSpec {
    int steps = 0;
    double strength = 0.0;
    friend bool operator==(const DenoiseSpec&, const DenoiseSpec&) = default;
};

struct PartitionPolicy {
    double update_threshold = 0.5;  // tau_update
    int generate_dilation = 3;      // pixels of UPDATE ring grown around GENERATE
    int generate_steps = 50;
    int update_steps = 10;
};

/// Per foreground pixel, from its sampled texel: unwritten -> GENERATE;
/// written with confidence below tau_update while the texel's cosine in this
/// view exceeds it -> UPDATE; otherwise KEEP. KEEP pixels within `generate_dilation` of a
/// GENERATE pixel then become UPDATE. Throws std::invalid_argument when the
/// correspondence was built for a different atlas size.
RegionMask classify_view(const TextureAtlas& atlas, const CorrespondenceMap& corr,
                         const PartitionPolicy& policy = {});

/// GENERATE: full denoise from noise; UPDATE: partial (strength = steps /
/// generate steps); KEEP: none. Throws std::invalid_argument for BACKGROUND.
DenoiseSpec denoise_policy(Region region, const PartitionPolicy& policy = {});

/// Debug PNG: background 0, generate 255, update 128, keep 64.
Grid<std::uint8_t> region_debug_image(const RegionMask& mask);
Region region_from_gray(std::uint8_t gray);

}  // namespace instex
