#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "instex/base64.hpp"
#include "instex/errors.hpp"
#include "instex/image_io.hpp"
#include "instex/synthesis.hpp"
#include "instex/wire.hpp"

#include <httplib.h>

using namespace instex;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kWireDir = fs::path(INSTEX_FIXTURE_DIR) / "wire";

json load_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE_MESSAGE(in.good(), "missing fixture " << p.string());
    return json::parse(in);
}

bool type_matches(const json& value, const std::string& type) {
    if (type == "string") return value.is_string();
    if (type == "integer") return value.is_number_integer();
    if (type == "number") return value.is_number();
    if (type == "boolean") return value.is_boolean();
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    return false;
}

/// Checks the subset of JSON Schema the wire fixtures use.
std::vector<std::string> schema_errors(const json& schema, const json& value, const std::string& where = "$") {
    std::vector<std::string> errors;
    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) ok = type_matches(value, t.get<std::string>());
        for (const json& alt : t.is_array() ? t : json::array()) ok = ok || type_matches(value, alt.get<std::string>());
        if (!ok) return {where + ": wrong type"};
    }
    if (schema.contains("enum") && std::find(schema["enum"].begin(), schema["enum"].end(), value) == schema["enum"].end()) {
        errors.push_back(where + ": not in enum");
    }
    if (schema.contains("minimum") && value.is_number() && value.get<double>() < schema["minimum"].get<double>()) {
        errors.push_back(where + ": below minimum");
    }
    if (schema.contains("maximum") && value.is_number() && value.get<double>() > schema["maximum"].get<double>()) {
        errors.push_back(where + ": above maximum");
    }
    if (value.is_object()) {
        for (const json& key : schema.value("required", json::array())) {
            if (!value.contains(key.get<std::string>())) errors.push_back(where + ": missing " + key.get<std::string>());
        }
        const json props = schema.value("properties", json::object());
        for (auto it = value.begin(); it != value.end(); ++it) {
            if (props.contains(it.key())) {
                for (auto& e : schema_errors(props[it.key()], it.value(), where + "." + it.key())) errors.push_back(e);
            } else if (schema.value("additionalProperties", true) == false) {
                errors.push_back(where + ": unexpected " + it.key());
            }
        }
    }
    return errors;
}

SynthesisRequest golden_request() {
    const Extent ext{4, 4};
    SynthesisRequest req;
    req.mode = SynthesisMode::DepthInpaint;
    req.resolution = ext;
    req.prompt = "a Baroque style coffee table";
    req.seed = 1234567890123ULL;
    req.denoise = {50, 1.0};
    req.style_image_id = "00c0ffee00c0ffee";
    req.depth_near = 0.01;
    req.depth_far = 10.0;
    DepthMap depth{Grid<float>(ext, 0.0f), Grid<std::uint8_t>(ext, 0)};
    RegionMask mask{Grid<Region>(ext, Region::Background)};
    RgbImage init(ext, kBlack);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            if (x == 0) continue;
            depth.depth(x, y) = 0.5f + 0.25f * static_cast<float>(y);
            depth.foreground(x, y) = 1;
            mask.region(x, y) = static_cast<Region>(1 + (x + y) % 3);
            init(x, y) = {static_cast<std::uint8_t>(40 * x), static_cast<std::uint8_t>(50 * y), 200};
        }
    }
    req.depth = depth;
    req.region_mask = mask;
    req.init_image = init;
    return req;
}

struct MockBridge {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> generate_calls{0};
    std::atomic<int> fail_first{0};         // answer 503 this many times
    std::atomic<int> answer_size{0};        // override output size when > 0
    std::atomic<bool> break_schema{false};  // omit image_png_b64
    json last_request;
    std::mutex mutex;

    MockBridge() {
        server.Post("/generate", [this](const httplib::Request& request, httplib::Response& response) {
            const int call = generate_calls++;
            if (call < fail_first) {
                response.status = 503;
                response.set_content(R"({"error":"queue full"})", "application/json");
                return;
            }
            json body = json::parse(request.body);
            {
                std::lock_guard lock(mutex);
                last_request = body;
            }
            SynthesisRequest req = wire::decode_request(body);
            if (answer_size > 0) req.resolution = {answer_size, answer_size}, req.region_mask.reset(), req.init_image.reset(), req.depth.reset(), req.mode = SynthesisMode::Text2Img;
            const RgbImage image = procedural_stub(req).image;
            json out = wire::encode_response(image, "mock-bridge");
            if (break_schema) out.erase("image_png_b64");
            response.set_content(out.dump(), "application/json");
        });
        server.Post("/style", [](const httplib::Request& request, httplib::Response& response) {
            const json body = json::parse(request.body);
            const RgbImage img = decode_png_rgb(base64_decode(body.at("image_png_b64").get<std::string>()));
            response.set_content(json{{"style_image_id", "mock-" + content_id(img)}}.dump(), "application/json");
        });
        server.Get("/health", [](const httplib::Request&, httplib::Response& response) {
            response.set_content(R"({"model_info":{"name":"mock-bridge"}})", "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~MockBridge() {
        server.stop();
        thread.join();
    }
    HttpBackendOptions options() const {
        HttpBackendOptions o;
        o.endpoint = "http://127.0.0.1:" + std::to_string(port);
        o.timeout = std::chrono::milliseconds(5000);
        o.retries = 3;
        o.backoff = std::chrono::milliseconds(0);
        return o;
    }
};

}  // namespace

TEST_CASE("wire request encoding validates against the golden schema and round trips") {
    const json schema = load_json(kWireDir / "generate_request.schema.json");
    const SynthesisRequest req = golden_request();
    const json body = wire::encode_request(req);
    const auto errors = schema_errors(schema, body);
    CHECK_MESSAGE(errors.empty(), (errors.empty() ? "" : errors.front()));

    if (std::getenv("INSTEX_REGEN_GOLDEN") != nullptr) {
        std::ofstream(kWireDir / "generate_request.golden.json") << body.dump(2) << "\n";
        std::ofstream(kWireDir / "generate_response.golden.json")
            << wire::encode_response(procedural_stub(req).image, "golden-stub").dump(2) << "\n";
    }

    const SynthesisRequest back = wire::decode_request(body);
    CHECK(back.mode == req.mode);
    CHECK(back.prompt == req.prompt);
    CHECK(back.seed == req.seed);
    CHECK(back.denoise == req.denoise);
    CHECK(back.resolution == req.resolution);
    CHECK(back.style_image_id == req.style_image_id);
    CHECK(back.region_mask->region == req.region_mask->region);
    CHECK(*back.init_image == *req.init_image);
    CHECK(back.depth->foreground == req.depth->foreground);
    // Normalized depth survives up to 16-bit quantization.
    CHECK(wire::normalized_depth(*back.depth, back.depth_near, back.depth_far) ==
          wire::normalized_depth(*req.depth, req.depth_near, req.depth_far));

    CHECK_THROWS_AS(wire::decode_request(json{{"mode", "DEPTH2IMG"}}), std::invalid_argument);
    json bad = body;
    bad["seed"] = "twelve";
    CHECK_THROWS_AS(wire::decode_request(bad), std::invalid_argument);
    CHECK_FALSE(schema_errors(schema, bad).empty());
    bad = body;
    bad["extra"] = 1;
    CHECK_FALSE(schema_errors(schema, bad).empty());
}

TEST_CASE("golden wire files decode to the reference request and response") {
    const json golden = load_json(kWireDir / "generate_request.golden.json");
    CHECK(schema_errors(load_json(kWireDir / "generate_request.schema.json"), golden).empty());
    const SynthesisRequest ref = golden_request();
    const SynthesisRequest req = wire::decode_request(golden);
    CHECK(req.mode == ref.mode);
    CHECK(req.prompt == ref.prompt);
    CHECK(req.seed == ref.seed);
    CHECK(req.region_mask->region == ref.region_mask->region);
    CHECK(*req.init_image == *ref.init_image);
    CHECK(wire::normalized_depth(*req.depth, 0.0, 1.0) == wire::normalized_depth(*ref.depth, ref.depth_near, ref.depth_far));
    const json expected_plain = wire::encode_request(ref);
    for (const char* key : {"mode", "prompt", "seed", "steps", "strength", "width", "height", "style_image_id"}) {
        CHECK(golden.at(key) == expected_plain.at(key));
    }

    const json response = load_json(kWireDir / "generate_response.golden.json");
    CHECK(schema_errors(load_json(kWireDir / "generate_response.schema.json"), response).empty());
    const SynthesisResponse decoded = wire::decode_response(response);
    CHECK(decoded.image == procedural_stub(ref).image);
    CHECK(decoded.model_info == "golden-stub");

    const json depth16 = wire::encode_request(ref);
    const Grid<std::uint16_t> d = decode_png_gray16(base64_decode(depth16["depth_png_b64"].get<std::string>()));
    CHECK(d(0, 0) == 0);
    CHECK(d(1, 0) > d(1, 3));  // nearer is brighter
}

TEST_CASE("http backend against a healthy mock bridge") {
    MockBridge bridge;
    HttpBackend backend(bridge.options());
    CHECK(backend.health().find("mock-bridge") != std::string::npos);
    const json health = json{{"model_info", json::parse(R"({"name":"mock-bridge"})")}};
    CHECK(schema_errors(load_json(kWireDir / "health_response.schema.json"), health).empty());

    SynthesisRequest req = golden_request();
    req.mode = SynthesisMode::Depth2Img;
    req.region_mask.reset();
    req.init_image.reset();
    req.resolution = {512, 512};
    req.depth = DepthMap{Grid<float>({512, 512}, 1.0f), Grid<std::uint8_t>({512, 512}, 1)};
    const SynthesisResponse r = synthesize(req, backend);
    CHECK(r.image.extent() == Extent{512, 512});
    CHECK(r.latency_ms > 0.0);
    CHECK(r.retries == 0);
    CHECK(r.model_info == "mock-bridge");
    {
        std::lock_guard lock(bridge.mutex);
        CHECK(schema_errors(load_json(kWireDir / "generate_request.schema.json"), bridge.last_request).empty());
    }

    const RgbImage style(Extent{8, 8}, {1, 2, 3});
    CHECK(backend.register_style(style) == "mock-" + content_id(style));
}

TEST_CASE("http backend retries transient failures") {
    MockBridge bridge;
    bridge.fail_first = 2;
    HttpBackend backend(bridge.options());
    const SynthesisResponse r = synthesize(golden_request(), backend);
    CHECK(r.retries == 2);
    CHECK(bridge.generate_calls == 3);
    CHECK(r.image == synthesize(golden_request(), *make_backend("stub")).image);

    MockBridge always;
    always.fail_first = 100;
    HttpBackendOptions o = always.options();
    o.retries = 2;
    HttpBackend give_up(o);
    CHECK_THROWS_WITH_AS(synthesize(golden_request(), give_up), doctest::Contains("503"), BackendError);
    CHECK(always.generate_calls == 3);
}

TEST_CASE("http backend rejects wrong sizes and schema violations") {
    MockBridge bridge;
    bridge.answer_size = 256;
    HttpBackend backend(bridge.options());
    SynthesisRequest req;
    req.mode = SynthesisMode::Text2Img;
    req.prompt = "a Baroque style bedroom";
    req.resolution = {512, 512};
    CHECK_THROWS_AS(synthesize(req, backend), BackendError);

    bridge.answer_size = 0;
    bridge.break_schema = true;
    CHECK_THROWS_WITH_AS(synthesize(req, backend), doctest::Contains("schema"), BackendError);
}

TEST_CASE("http backend reports unreachable endpoints") {
    HttpBackendOptions o;
    o.endpoint = "http://127.0.0.1:1";
    o.retries = 1;
    o.backoff = std::chrono::milliseconds(0);
    o.timeout = std::chrono::milliseconds(500);
    HttpBackend backend(o);
    SynthesisRequest req;
    req.prompt = "x";
    req.resolution = {8, 8};
    CHECK_THROWS_AS(synthesize(req, backend), BackendError);
    CHECK_THROWS_AS(backend.health(), BackendError);
    CHECK_THROWS_AS(HttpBackend(HttpBackendOptions{"localhost:80"}), ConfigError);
}
