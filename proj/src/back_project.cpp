#include "instex/back_project.hpp"

#include <stdexcept>

namespace instex {

ProjectionReport project_image(const RgbImage& image, const CorrespondenceMap& corr, const RegionMask& mask,
                               TextureAtlas& atlas, double min_cosine) {
    if (image.extent() != corr.image || mask.extent() != corr.image) {
        throw std::invalid_argument("project_image: image/mask/correspondence resolution mismatch");
    }
    if (atlas.extent() != corr.atlas) throw std::invalid_argument("project_image: atlas resolution mismatch");

    ProjectionReport report;
    for (std::size_t t = 0; t < corr.texels.size(); ++t) {
        const TexelVisibility& vis = corr.texels[t];
        if (!vis.visible) continue;
        const auto pixel = static_cast<std::size_t>(vis.pixel);
        const Region region = mask.region[pixel];
        if (region != Region::Generate && region != Region::Update) continue;
        if (vis.cosine < min_cosine || !(vis.cosine > atlas.confidence[t])) {
            ++report.texels_skipped;
            continue;
        }
        const TexelState old = atlas.state[t];
        atlas.color[t] = image[pixel];
        atlas.confidence[t] = vis.cosine;
        if (old == TexelState::Unwritten) {
            atlas.state[t] = TexelState::Generated;
        } else if (region == Region::Update) {
            atlas.state[t] = TexelState::Updated;
        }
        ++report.texels_written;
    }
    return report;
}

void finalize_object(TextureAtlas& atlas) {
    for (std::size_t i = 0; i < atlas.state.size(); ++i) {
        if (atlas.state[i] == TexelState::Generated || atlas.state[i] == TexelState::Updated) {
            atlas.state[i] = TexelState::Kept;
        }
    }
    dilate_gutter(atlas, kGutterRadius);
}

}  // namespace instex
