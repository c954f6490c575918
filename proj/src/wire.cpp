#include "instex/wire.hpp"

#include <cmath>
#include <stdexcept>

#include "instex/base64.hpp"
#include "instex/image_io.hpp"

namespace instex::wire {

using nlohmann::json;

namespace {

std::string png_b64(const std::vector<std::uint8_t>& png) { return base64_encode(png); }

std::vector<std::uint8_t> b64_png(const json& body, const char* key) {
    if (!body[key].is_string()) throw std::invalid_argument(std::string("wire: field ") + key + " must be a string");
    return base64_decode(body[key].get<std::string>());
}

template <typename T>
T required(const json& body, const char* key) {
    if (!body.contains(key)) throw std::invalid_argument(std::string("wire: missing field ") + key);
    try {
        return body.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(std::string("wire: field ") + key + " has the wrong type");
    }
}

template <typename Image>
void check_extent(const Image& image, Extent expected, const char* what) {
    if (image.extent() != expected) throw std::invalid_argument(std::string("wire: ") + what + " size mismatch");
}

}  // namespace

Grid<std::uint16_t> normalized_depth(const DepthMap& depth, double near_plane, double far_plane) {
    Grid<std::uint16_t> out(depth.extent(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!depth.foreground[i]) continue;
        const double d_norm = std::clamp((far_plane - depth.depth[i]) / (far_plane - near_plane), 0.0, 1.0);
        out[i] = static_cast<std::uint16_t>(std::lround(d_norm * 65535.0));
    }
    return out;
}

json encode_request(const SynthesisRequest& req) {
    json body = {
        {"mode", std::string(to_string(req.mode))},
        {"prompt", req.prompt},
        {"seed", req.seed},
        {"steps", req.denoise.steps},
        {"strength", req.denoise.strength},
        {"width", req.resolution.width},
        {"height", req.resolution.height},
    };
    if (req.depth) body["depth_png_b64"] = png_b64(encode_png(normalized_depth(*req.depth, req.depth_near, req.depth_far)));
    if (req.region_mask) body["mask_png_b64"] = png_b64(encode_png(region_debug_image(*req.region_mask)));
    if (req.init_image) body["init_png_b64"] = png_b64(encode_png(*req.init_image));
    if (req.position_map) {
        Grid<Rgb16> pos(req.position_map->extent(), Rgb16{0, 0, 0});
        for (std::size_t i = 0; i < pos.size(); ++i) {
            if (!req.position_map->valid[i]) continue;
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(static_cast<double>(req.position_map->position[i][c]), 0.0, 1.0);
                pos[i][c] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
            }
        }
        body["position_png_b64"] = png_b64(encode_png(pos));
    }
    if (req.style_image_id) body["style_image_id"] = *req.style_image_id;
    return body;
}

SynthesisRequest decode_request(const json& body) {
    if (!body.is_object()) throw std::invalid_argument("wire: request body must be an object");
    SynthesisRequest req;
    req.mode = synthesis_mode_from_string(required<std::string>(body, "mode"));
    req.prompt = required<std::string>(body, "prompt");
    req.seed = required<std::uint64_t>(body, "seed");
    req.denoise.steps = required<int>(body, "steps");
    req.denoise.strength = required<double>(body, "strength");
    req.resolution.width = required<int>(body, "width");
    req.resolution.height = required<int>(body, "height");
    req.depth_near = 0.0;
    req.depth_far = 1.0;
    if (body.contains("depth_png_b64")) {
        const Grid<std::uint16_t> d = decode_png_gray16(b64_png(body, "depth_png_b64"));
        check_extent(d, req.resolution, "depth");
        DepthMap depth{Grid<float>(d.extent(), 0.0f), Grid<std::uint8_t>(d.extent(), 0)};
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d[i] == 0) continue;
            // Recovered on the [0,1] normalized scale: far - d_norm.
            depth.depth[i] = static_cast<float>(1.0 - d[i] / 65535.0);
            depth.foreground[i] = 1;
        }
        req.depth = std::move(depth);
    }
    if (body.contains("mask_png_b64")) {
        const Grid<std::uint8_t> g = decode_png_gray(b64_png(body, "mask_png_b64"));
        check_extent(g, req.resolution, "mask");
        RegionMask mask{Grid<Region>(g.extent(), Region::Background)};
        for (std::size_t i = 0; i < g.size(); ++i) mask.region[i] = region_from_gray(g[i]);
        req.region_mask = std::move(mask);
    }
    if (body.contains("init_png_b64")) {
        req.init_image = decode_png_rgb(b64_png(body, "init_png_b64"));
        check_extent(*req.init_image, req.resolution, "init image");
    }
    if (body.contains("position_png_b64")) {
        const Grid<Rgb16> p = decode_png_rgb16(b64_png(body, "position_png_b64"));
        check_extent(p, req.resolution, "position map");
        PositionMap pmap{Grid<std::array<float, 3>>(p.extent(), {0.0f, 0.0f, 0.0f}), Grid<std::uint8_t>(p.extent(), 0)};
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] == Rgb16{0, 0, 0}) continue;
            for (int c = 0; c < 3; ++c) pmap.position[i][c] = static_cast<float>(p[i][c] / 65535.0);
            pmap.valid[i] = 1;
        }
        req.position_map = std::move(pmap);
    }
    if (body.contains("style_image_id")) req.style_image_id = required<std::string>(body, "style_image_id");
    return req;
}

json encode_response(const RgbImage& image, const std::string& model_info) {
    return {{"image_png_b64", png_b64(encode_png(image))}, {"model_info", model_info}};
}

SynthesisResponse decode_response(const json& body) {
    if (!body.is_object()) throw std::invalid_argument("wire: response body must be an object");
    SynthesisResponse response;
    const std::string b64 = required<std::string>(body, "image_png_b64");
    try {
        response.image = decode_png_rgb(base64_decode(b64));
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("wire: undecodable image: ") + e.what());
    }
    if (body.contains("model_info")) {
        const json& info = body["model_info"];
        response.model_info = info.is_string() ? info.get<std::string>() : info.dump();
    }
    return response;
}

}  // namespace instex::wire
