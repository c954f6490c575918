#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "instex/atlas.hpp"
#include "instex/back_project.hpp"
#include "instex/mesh.hpp"
#include "instex/partition.hpp"
#include "instex/raster.hpp"
#include "instex/refine.hpp"
#include "instex/scene.hpp"
#include "instex/synthesis.hpp"
#include "instex/views.hpp"

namespace instex {

struct PipelineConfig {
    std::filesystem::path scene_manifest;
    std::string style;  // empty: take the style from the scene manifest
    std::uint64_t seed = 0;
    std::string backend = "stub";  // "stub" or http://host:port
    int atlas_resolution = 1024;
    int image_resolution = 512;
    double object_azimuth_step = 45.0;
    double room_azimuth_step = 45.0;
    double tau_proj = kMinProjectionCosine;
    double tau_update = 0.5;
    double tau_refine = kRefineConfidence;
    int generate_steps = 50;
    int update_steps = 10;
    bool postprocess = false;
    std::filesystem::path output_dir = "out";
    int max_in_flight = 2;
    bool dump_views = true;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
    /// Inverse of to_json; missing keys keep their defaults.
    static PipelineConfig from_json(const nlohmann::json& j);
    [[nodiscard]] PartitionPolicy partition_policy() const;
};

struct ViewRecord {
    int index = 0;
    Viewpoint viewpoint;
    std::uint64_t seed = 0;
    std::string mode;  // synthesis mode, or "SKIPPED" when nothing needs generating
    RegionCounts regions;
    DenoiseSpec denoise;
    std::size_t texels_written = 0;
    std::size_t texels_skipped = 0;
    double latency_ms = 0.0;
    int retries = 0;
};

struct ObjectRecord {
    std::string id;
    std::string kind;  // "object" or "room"
    std::string name;
    std::string prompt;
    std::uint64_t base_seed = 0;
    std::size_t valid_texels = 0;
    std::vector<ViewRecord> views;
    std::size_t kept_after_sweep = 0;
    std::size_t unwritten_after_sweep = 0;
    std::uint64_t refine_seed = 0;
    RefineReport refine;
    std::size_t unwritten_after_refine = 0;
    std::optional<RefineReport> postprocess;
    double seam_before_refine = 0.0;
    double seam_after_refine = 0.0;
    double wall_ms = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct RunError {
    std::string stage;
    std::string message;
    int exit_code = 1;
};

struct RunManifest {
    nlohmann::json config;
    std::string style_prompt;
    std::string style_image_id;
    std::string style_image_hash;
    std::vector<ObjectRecord> objects;
    std::vector<std::string> eval_renders;
    std::vector<std::string> stages;  // completed stages in order
    double wall_ms = 0.0;
    std::optional<RunError> error;

    [[nodiscard]] int exit_code() const { return error ? error->exit_code : 0; }
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Removes every key whose name contains "latency" or "wall", recursively.
nlohmann::json strip_timing(const nlohmann::json& j);

/// "a {style} style {room_type}". Throws ConfigError on empty input.
std::string style_prompt(std::string_view style, std::string_view room_type);
/// "a {style} style {object_name}". Throws ConfigError on empty input.
std::string object_prompt(std::string_view style, std::string_view object_name);

/// Per-object base seed: hash of the run seed and the object id.
std::uint64_t object_seed(std::uint64_t run_seed, std::string_view object_id);

struct StyleImage {
    RgbImage image;
    std::string id;
    std::string content_hash;
    double latency_ms = 0.0;
};

/// One TEXT2IMG call, then the image is registered with the backend.
StyleImage global_style_image(const std::string& prompt, SynthesisBackend& backend, std::uint64_t seed, Extent resolution);

/// Snapshot hook: called with a stage label ("view", "finalize", "refine")
/// and the atlas after that stage.
using AtlasObserver = std::function<void(std::string_view stage, const TextureAtlas& atlas)>;

struct TexturingParams {
    std::string prompt;
    std::optional<std::string> style_image_id;
    std::uint64_t base_seed = 0;
    std::vector<Viewpoint> views = object_viewpoints();
    CullMode cull = CullMode::Back;
    CameraIntrinsics intrinsics;
    PartitionPolicy policy;
    double tau_proj = kMinProjectionCosine;
    double tau_refine = kRefineConfidence;
    std::optional<std::filesystem::path> dump_dir;  // per-view debug images
    AtlasObserver observer;
};

struct TexturingResult {
    TextureAtlas atlas;
    ObjectRecord record;
};

/// Coarse multi-view sweep over `atlas` followed by UV refinement. On a
/// backend failure the partial atlas is written into dump_dir (when set)
/// before the error propagates.
TexturingResult texture_object(const Mesh& canonical_mesh, TextureAtlas atlas, const TexturingParams& params,
                               SynthesisBackend& backend);

/// 20 renders of the recomposed scene from eval_viewpoints(eval_center).
/// Rooms are front-culled, furniture back-culled; one shared z-buffer.
std::vector<RgbImage> eval_renders(const SceneGraph& scene, Extent resolution);

/// Center used for eval renders: the first room's bounding-box center, or the
/// whole scene's when there is no room.
Vec3 eval_center(const SceneGraph& scene);

/// Writes scene/eval_NN.png under `out_dir`; returns paths relative to it.
std::vector<std::string> write_eval_renders(const SceneGraph& scene, Extent resolution,
                                            const std::filesystem::path& out_dir);

/// Reloads a finished run (scene/scene.json plus per-object mesh.obj,
/// atlas.png and state.png) as a textured world-space scene. Throws
/// ConfigError when the directory is not a run output.
SceneGraph load_run_scene(const std::filesystem::path& out_dir);

/// Mean absolute color difference across UV seams: for every mesh edge shared
/// by two triangles with different UV edges, 8 samples on each side.
double seam_consistency_metric(const Mesh& mesh, const TextureAtlas& atlas);

/// Full run. Never throws for pipeline failures: they are reported in the
/// returned manifest (and in manifest.json) with the stage they occurred in.
/// `backend` overrides config.backend when given.
RunManifest run_pipeline(const PipelineConfig& config, SynthesisBackend* backend = nullptr);

/// Exit code for an exception type: 2 config, 3 backend, 4 geometry, 1 other.
int exit_code_for(const std::exception& e);

}  // namespace instex
