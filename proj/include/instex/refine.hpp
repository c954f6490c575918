#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "instex/atlas.hpp"
#include "instex/image_io.hpp"
#include "instex/mesh.hpp"
#include "instex/partition.hpp"
#include "instex/position_map.hpp"
#include "instex/synthesis.hpp"

namespace instex {

inline constexpr double kRefineConfidence = 0.3;  // tau_refine
inline constexpr double kCanonicalTolerance = 1e-6;

/// Barycentric surface point of every valid texel, shifted by +0.5 into
/// [0,1]^3. Throws GeometryError when the mesh is not canonical.
PositionMap position_map(const Mesh& canonical_mesh, const TextureAtlas& atlas);

/// 16-bit-per-channel dump (value * 65535).
Grid<Rgb16> position_debug_image(const PositionMap& pmap);

/// valid && (unwritten || confidence < tau_refine).
Grid<std::uint8_t> inpaint_mask(const TextureAtlas& atlas, double tau_refine = kRefineConfidence);
std::size_t mask_count(const Grid<std::uint8_t>& mask);

struct RefineParams {
    std::string prompt;
    std::optional<std::string> style_image_id;
    std::uint64_t seed = 0;
    double tau_refine = kRefineConfidence;
    DenoiseSpec denoise{50, 1.0};
};

struct RefineReport {
    std::size_t masked_texels = 0;
    double masked_fraction = 0.0;  // of valid texels
    bool backend_called = false;
    double latency_ms = 0.0;
    int retries = 0;
};

/// One UV_REFINE call with init = atlas color and mask = `mask`. Masked
/// texels take the backend output, become KEPT and get confidence at least
/// tau_refine; the gutter is then dilated again. Valid unmasked texels are
/// byte-identical to the input. An empty mask returns the atlas unchanged
/// without calling the backend. Throws std::invalid_argument on size
/// mismatches.
TextureAtlas refine_texture(const TextureAtlas& atlas, const PositionMap& pmap, const Grid<std::uint8_t>& mask,
                            const RefineParams& params, SynthesisBackend& backend, RefineReport* report = nullptr);

inline constexpr DenoiseSpec kPostprocessDenoise{10, 0.2};

/// Low-strength UV_REFINE pass over every valid texel (marked UPDATE), used
/// for the final scene pass. States and confidences are left alone.
TextureAtlas postprocess_atlas(const TextureAtlas& atlas, const PositionMap& pmap, const RefineParams& params,
                               SynthesisBackend& backend, RefineReport* report = nullptr);

}  // namespace instex
