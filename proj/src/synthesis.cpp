#include "instex/synthesis.hpp"

#include <stdexcept>

#include "instex/errors.hpp"
#include "instex/hash.hpp"

namespace instex {

namespace {

constexpr int kDepthLevels = 16;
constexpr int kPositionLevels = 16;

int quantize(double value, int levels) {
    const int q = static_cast<int>(value * levels);
    return std::clamp(q, 0, levels - 1);
}

Region stub_region(const SynthesisRequest& req, int x, int y) {
    if (req.region_mask) return req.region_mask->region(x, y);
    switch (req.mode) {
        case SynthesisMode::Depth2Img:
        case SynthesisMode::DepthInpaint:
            return req.depth->foreground(x, y) ? Region::Generate : Region::Background;
        case SynthesisMode::UvRefine:
            return req.position_map->valid(x, y) ? Region::Generate : Region::Background;
        case SynthesisMode::Text2Img:
            return Region::Generate;
    }
    return Region::Generate;
}

template <typename Image>
void require_extent(const Image& image, Extent expected, const char* what) {
    if (image.extent() != expected) {
        throw std::invalid_argument(std::string("synthesis request: ") + what + " resolution mismatch");
    }
}

}  // namespace

std::string_view to_string(SynthesisMode mode) {
    switch (mode) {
        case SynthesisMode::Depth2Img: return "DEPTH2IMG";
        case SynthesisMode::DepthInpaint: return "DEPTH_INPAINT";
        case SynthesisMode::UvRefine: return "UV_REFINE";
        case SynthesisMode::Text2Img: return "TEXT2IMG";
    }
    return "?";
}

SynthesisMode synthesis_mode_from_string(std::string_view text) {
    if (text == "DEPTH2IMG") return SynthesisMode::Depth2Img;
    if (text == "DEPTH_INPAINT") return SynthesisMode::DepthInpaint;
    if (text == "UV_REFINE") return SynthesisMode::UvRefine;
    if (text == "TEXT2IMG") return SynthesisMode::Text2Img;
    throw std::invalid_argument("unknown synthesis mode: " + std::string(text));
}

void validate_request(const SynthesisRequest& req) {
    if (req.resolution.width <= 0 || req.resolution.height <= 0) {
        throw std::invalid_argument("synthesis request: empty resolution");
    }
    if (req.denoise.steps < 0 || req.denoise.strength < 0.0 || req.denoise.strength > 1.0) {
        throw std::invalid_argument("synthesis request: invalid denoise spec");
    }
    switch (req.mode) {
        case SynthesisMode::Depth2Img:
        case SynthesisMode::DepthInpaint:
            if (!req.depth) throw std::invalid_argument("synthesis request: depth mode without depth map");
            if (!(req.depth_far > req.depth_near)) throw std::invalid_argument("synthesis request: bad depth range");
            break;
        case SynthesisMode::UvRefine:
            if (!req.position_map || !req.init_image) {
                throw std::invalid_argument("synthesis request: UV_REFINE needs position map and init image");
            }
            break;
        case SynthesisMode::Text2Img:
            if (req.prompt.empty()) throw std::invalid_argument("synthesis request: TEXT2IMG without prompt");
            break;
    }
    if (req.region_mask && !req.init_image) {
        throw std::invalid_argument("synthesis request: region mask without init image");
    }
    if (req.depth) require_extent(req.depth->depth, req.resolution, "depth");
    if (req.region_mask) require_extent(req.region_mask->region, req.resolution, "mask");
    if (req.init_image) require_extent(*req.init_image, req.resolution, "init image");
    if (req.position_map) require_extent(req.position_map->position, req.resolution, "position map");
}

SynthesisResponse synthesize(const SynthesisRequest& req, SynthesisBackend& backend) {
    validate_request(req);
    const auto start = std::chrono::steady_clock::now();
    SynthesisResponse response = backend.generate(req);
    const auto stop = std::chrono::steady_clock::now();
    if (response.image.extent() != req.resolution) {
        throw BackendError("backend " + backend.id() + " returned " + std::to_string(response.image.width()) + "x" +
                           std::to_string(response.image.height()) + " for a " + std::to_string(req.resolution.width) +
                           "x" + std::to_string(req.resolution.height) + " request");
    }
    if (req.region_mask) {
        const RgbImage& init = *req.init_image;
        for (std::size_t i = 0; i < response.image.size(); ++i) {
            const Region r = req.region_mask->region[i];
            if (r == Region::Keep || r == Region::Background) response.image[i] = init[i];
        }
    }
    if (response.backend_id.empty()) response.backend_id = backend.id();
    response.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    return response;
}

std::string content_id(const RgbImage& image) {
    std::uint64_t h = kFnvOffset;
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(image.width()), static_cast<std::uint32_t>(image.height())};
    h = fnv1a64({reinterpret_cast<const std::uint8_t*>(dims), sizeof(dims)}, h);
    for (const Rgb8& c : image) {
        const std::uint8_t bytes[3] = {c.r, c.g, c.b};
        h = fnv1a64(bytes, h);
    }
    return to_hex(h);
}

int depth_bucket(float depth, double near_plane, double far_plane) {
    const double d_norm = (far_plane - depth) / (far_plane - near_plane);
    return quantize(d_norm, kDepthLevels);
}

std::uint32_t position_bucket(const std::array<float, 3>& p) {
    const auto bx = static_cast<std::uint32_t>(quantize(p[0], kPositionLevels));
    const auto by = static_cast<std::uint32_t>(quantize(p[1], kPositionLevels));
    const auto bz = static_cast<std::uint32_t>(quantize(p[2], kPositionLevels));
    return 1 + (bx * kPositionLevels + by) * kPositionLevels + bz;
}

Rgb8 stub_color(std::uint64_t seed, std::uint64_t prompt_digest, std::uint32_t depth_key, std::uint32_t position_key) {
    std::uint64_t h = hash_combine(seed, prompt_digest);
    h = hash_combine(h, depth_key);
    h = hash_combine(h, position_key);
    return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
}

SynthesisResponse procedural_stub(const SynthesisRequest& req) {
    const Extent ext = req.resolution;
    const std::uint64_t digest = fnv1a64(req.prompt);
    RgbImage image(ext, kBlack);
    for (int y = 0; y < ext.height; ++y) {
        for (int x = 0; x < ext.width; ++x) {
            const Region region = stub_region(req, x, y);
            const Rgb8 init = req.init_image ? (*req.init_image)(x, y) : kBlack;
            if (region == Region::Keep || region == Region::Background) {
                image(x, y) = init;
                continue;
            }
            std::uint32_t depth_key = 0;
            if (req.depth && req.depth->foreground(x, y)) {
                depth_key = 1 + static_cast<std::uint32_t>(depth_bucket(req.depth->depth(x, y), req.depth_near, req.depth_far));
            } else if (!req.depth && !req.position_map) {
                depth_key = 1 + static_cast<std::uint32_t>(y * kDepthLevels / ext.height);
            }
            std::uint32_t position_key = 0;
            if (req.position_map && req.position_map->valid(x, y)) position_key = position_bucket(req.position_map->position(x, y));
            const Rgb8 c = stub_color(req.seed, digest, depth_key, position_key);
            if (region == Region::Generate) {
                image(x, y) = c;
            } else {
                image(x, y) = {static_cast<std::uint8_t>((init.r + c.r) / 2), static_cast<std::uint8_t>((init.g + c.g) / 2),
                               static_cast<std::uint8_t>((init.b + c.b) / 2)};
            }
        }
    }
    return {std::move(image), "stub", 0.0, 0, "procedural-stub"};
}

BoundedBackend::BoundedBackend(SynthesisBackend& inner, int max_in_flight)
    : inner_(inner), slots_(std::clamp(max_in_flight, 1, 64)) {}

SynthesisResponse BoundedBackend::generate(const SynthesisRequest& req) {
    slots_.acquire();
    try {
        SynthesisResponse r = inner_.generate(req);
        slots_.release();
        return r;
    } catch (...) {
        slots_.release();
        throw;
    }
}

std::string BoundedBackend::register_style(const RgbImage& image) {
    slots_.acquire();
    try {
        std::string id = inner_.register_style(image);
        slots_.release();
        return id;
    } catch (...) {
        slots_.release();
        throw;
    }
}

std::unique_ptr<SynthesisBackend> make_backend(std::string_view spec, const HttpBackendOptions& http) {
    if (spec == "stub") return std::make_unique<StubBackend>();
    if (spec.starts_with("http://")) {
        HttpBackendOptions options = http;
        options.endpoint = std::string(spec);
        return std::make_unique<HttpBackend>(options);
    }
    throw ConfigError("unknown backend '" + std::string(spec) + "' (expected stub or http://host:port)");
}

}  // namespace instex
