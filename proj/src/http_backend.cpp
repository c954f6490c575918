#include <thread>

#include "instex/base64.hpp"
#include "instex/errors.hpp"
#include "instex/image_io.hpp"
#include "instex/synthesis.hpp"
#include "instex/wire.hpp"

#include <httplib.h>

namespace instex {

using nlohmann::json;

struct HttpBackend::Endpoint {
    std::string origin;     // scheme://host:port
    std::string base_path;  // prefix for every route, without trailing slash
};

namespace {


bool transient(const httplib::Result& result) { return !result || result->status >= 500; }

std::string describe(const httplib::Result& result) {
    if (!result) return "connection failed (" + httplib::to_string(result.error()) + ")";
    return "HTTP " + std::to_string(result->status);
}

json parse_body(const std::string& body, const std::string& route) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw BackendError(route + ": response is not JSON: " + e.what());
    }
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    const std::string& url = options_.endpoint;
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) throw ConfigError("http backend endpoint must start with http://: " + url);
    const std::size_t slash = url.find('/', scheme.size());
    endpoint_ = std::make_unique<Endpoint>();
    endpoint_->origin = url.substr(0, slash);
    if (slash != std::string::npos) endpoint_->base_path = url.substr(slash);
    while (!endpoint_->base_path.empty() && endpoint_->base_path.back() == '/') endpoint_->base_path.pop_back();
    if (endpoint_->origin.size() <= scheme.size()) throw ConfigError("http backend endpoint has no host: " + url);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const { return "http:" + options_.endpoint; }

namespace {

struct CallResult {
    json body;
    int retries = 0;
};

template <typename Send>
CallResult call_with_retries(const std::string& route, const HttpBackendOptions& options, Send&& send) {
    CallResult out;
    for (int attempt = 0;; ++attempt) {
        httplib::Result result = send();
        if (!transient(result)) {
            if (result->status != 200) {
                throw BackendError(route + ": " + describe(result) + ": " + result->body);
            }
            out.body = parse_body(result->body, route);
            out.retries = attempt;
            return out;
        }
        if (attempt >= options.retries) {
            throw BackendError(route + ": " + describe(result) + " after " + std::to_string(attempt) + " retries");
        }
        std::this_thread::sleep_for(options.backoff * (attempt + 1));
    }
}

httplib::Client make_client(const std::string& origin, const HttpBackendOptions& options) {
    httplib::Client client(origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    return client;
}

}  // namespace

SynthesisResponse HttpBackend::generate(const SynthesisRequest& req) {
    const std::string route = endpoint_->base_path + "/generate";
    const std::string payload = wire::encode_request(req).dump();
    httplib::Client client = make_client(endpoint_->origin, options_);
    CallResult call = call_with_retries(route, options_, [&] {
        return client.Post(route, payload, "application/json");
    });
    SynthesisResponse response;
    try {
        response = wire::decode_response(call.body);
    } catch (const std::invalid_argument& e) {
        throw BackendError(route + ": schema violation: " + e.what());
    }
    response.backend_id = id();
    response.retries = call.retries;
    return response;
}

std::string HttpBackend::register_style(const RgbImage& image) {
    const std::string route = endpoint_->base_path + "/style";
    const std::string payload = json{{"image_png_b64", base64_encode(encode_png(image))}}.dump();
    httplib::Client client = make_client(endpoint_->origin, options_);
    CallResult call = call_with_retries(route, options_, [&] {
        return client.Post(route, payload, "application/json");
    });
    if (!call.body.is_object() || !call.body.contains("style_image_id") || !call.body["style_image_id"].is_string()) {
        throw BackendError(route + ": schema violation: missing style_image_id");
    }
    return call.body["style_image_id"].get<std::string>();
}

std::string HttpBackend::health() {
    const std::string route = endpoint_->base_path + "/health";
    httplib::Client client = make_client(endpoint_->origin, options_);
    CallResult call = call_with_retries(route, options_, [&] { return client.Get(route); });
    if (!call.body.is_object() || !call.body.contains("model_info")) {
        throw BackendError(route + ": schema violation: missing model_info");
    }
    const json& info = call.body["model_info"];
    return info.is_string() ? info.get<std::string>() : info.dump();
}

}  // namespace instex
