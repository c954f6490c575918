#pragma once

#include <cstddef>

#include "instex/atlas.hpp"
#include "instex/partition.hpp"
#include "instex/raster.hpp"

namespace instex {

inline constexpr double kMinProjectionCosine = 0.2;  // tau_proj

struct ProjectionReport {
    std::size_t texels_written = 0;
    std::size_t texels_skipped = 0;  // visible, routed to GENERATE/UPDATE, but rejected
};

/// Writes `image` into every visible texel whose routing pixel is GENERATE or
/// UPDATE, provided the view cosine reaches `min_cosine` and beats the stored
/// confidence (best cosine wins). KEEP pixels never touch the atlas. Throws
/// std::invalid_argument on any resolution mismatch.
ProjectionReport project_image(const RgbImage& image, const CorrespondenceMap& corr, const RegionMask& mask,
                               TextureAtlas& atlas, double min_cosine = kMinProjectionCosine);

/// End of a sweep: written texels become KEPT and a gutter is dilated around
/// the charts. Valid texels never written stay UNWRITTEN.
void finalize_object(TextureAtlas& atlas);

}  // namespace instex
