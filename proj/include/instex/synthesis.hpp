#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "instex/grid.hpp"
#include "instex/partition.hpp"
#include "instex/position_map.hpp"
#include "instex/raster.hpp"

namespace instex {

enum class SynthesisMode { Depth2Img, DepthInpaint, UvRefine, Text2Img };

std::string_view to_string(SynthesisMode mode);
SynthesisMode synthesis_mode_from_string(std::string_view text);

/// Everything a generator needs for one image. Optional parts depend on the
/// mode; see validate_request.
struct SynthesisRequest {
    SynthesisMode mode = SynthesisMode::Text2Img;
    std::optional<DepthMap> depth;
    double depth_near = 0.01;  // normalization range for `depth`
    double depth_far = 10.0;
    std::optional<RegionMask> region_mask;
    std::optional<RgbImage> init_image;
    std::optional<PositionMap> position_map;
    std::string prompt;
    std::optional<std::string> style_image_id;
    DenoiseSpec denoise;
    std::uint64_t seed = 0;
    Extent resolution{512, 512};
};

struct SynthesisResponse {
    RgbImage image;
    std::string backend_id;
    double latency_ms = 0.0;
    int retries = 0;
    std::string model_info;
};

/// Throws std::invalid_argument when mode requirements are unmet or an
/// attached image does not match `resolution`. A region mask needs an init
/// image.
void validate_request(const SynthesisRequest& req);

class SynthesisBackend {
public:
    virtual ~SynthesisBackend() = default;
    [[nodiscard]] virtual std::string id() const = 0;
    /// Raw backend call; throws BackendError on failure.
    virtual SynthesisResponse generate(const SynthesisRequest& req) = 0;
    /// Makes a style image referable by id in later requests.
    virtual std::string register_style(const RgbImage& image) = 0;
};

/// Validates, calls the backend, checks the returned size, then copies the
/// init image over every KEEP and BACKGROUND pixel so kept content survives
/// regardless of backend behavior.
SynthesisResponse synthesize(const SynthesisRequest& req, SynthesisBackend& backend);

/// Content hash used as a style image id.
std::string content_id(const RgbImage& image);

// ---------------------------------------------------------------------------
// Procedural stub

/// Depth bucket (16 levels) of the normalized depth (far - d) / (far - near).
int depth_bucket(float depth, double near_plane, double far_plane);
/// 1 + 16x16x16 cell index of a position in [0,1]^3.
std::uint32_t position_bucket(const std::array<float, 3>& p);

/// Color the stub assigns to a GENERATE pixel.
Rgb8 stub_color(std::uint64_t seed, std::uint64_t prompt_digest, std::uint32_t depth_key, std::uint32_t position_key);

/// Pure function of the request: GENERATE pixels get stub_color of their
/// buckets, UPDATE pixels the floor average of init and that color, and
/// KEEP/BACKGROUND pixels copy init (black without one).
SynthesisResponse procedural_stub(const SynthesisRequest& req);

class StubBackend final : public SynthesisBackend {
public:
    [[nodiscard]] std::string id() const override { return "stub"; }
    SynthesisResponse generate(const SynthesisRequest& req) override { return procedural_stub(req); }
    std::string register_style(const RgbImage& image) override { return content_id(image); }
};

// ---------------------------------------------------------------------------
// HTTP bridge client

struct HttpBackendOptions {
    std::string endpoint;  // e.g. http://127.0.0.1:7860
    std::chrono::milliseconds timeout{120000};
    int retries = 3;
    std::chrono::milliseconds backoff{250};
};

/// Client for the diffusion bridge: POST /generate, POST /style, GET /health.
/// Retries connection failures and 5xx answers; 4xx and malformed bodies
/// fail immediately.
class HttpBackend final : public SynthesisBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);
    ~HttpBackend() override;

    [[nodiscard]] std::string id() const override;
    SynthesisResponse generate(const SynthesisRequest& req) override;
    std::string register_style(const RgbImage& image) override;
    /// model_info from GET /health; throws BackendError when unreachable.
    std::string health();

private:
    struct Endpoint;
    HttpBackendOptions options_;
    std::unique_ptr<Endpoint> endpoint_;
};

/// Caps the number of concurrent calls into `inner`.
class BoundedBackend final : public SynthesisBackend {
public:
    BoundedBackend(SynthesisBackend& inner, int max_in_flight);

    [[nodiscard]] std::string id() const override { return inner_.id(); }
    SynthesisResponse generate(const SynthesisRequest& req) override;
    std::string register_style(const RgbImage& image) override;

private:
    SynthesisBackend& inner_;
    std::counting_semaphore<64> slots_;
};

/// `stub` or an http:// URL; anything else is a ConfigError.
std::unique_ptr<SynthesisBackend> make_backend(std::string_view spec, const HttpBackendOptions& http = {});

}  // namespace instex
