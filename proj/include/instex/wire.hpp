#pragma once

#include <json.hpp>

#include "instex/synthesis.hpp"

namespace instex::wire {

// JSON body of POST /generate:
//   {mode, prompt, seed, steps, strength, width, height,
//    depth_png_b64?, mask_png_b64?, init_png_b64?, position_png_b64?, style_image_id?}
// Response: {image_png_b64, model_info}.
// Depth travels as 16-bit gray (far - d) / (far - near), background 0; the
// mask as 8-bit gray using the region debug palette; positions as 16-bit RGB.

nlohmann::json encode_request(const SynthesisRequest& req);
/// Throws std::invalid_argument on schema violations.
SynthesisRequest decode_request(const nlohmann::json& body);

nlohmann::json encode_response(const RgbImage& image, const std::string& model_info);
/// Throws std::invalid_argument on schema violations.
SynthesisResponse decode_response(const nlohmann::json& body);

Grid<std::uint16_t> normalized_depth(const DepthMap& depth, double near_plane, double far_plane);

}  // namespace instex::wire
