#include "instex/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include "instex/canonical.hpp"
#include "instex/errors.hpp"
#include "instex/hash.hpp"
#include "instex/image_io.hpp"
#include "instex/wire.hpp"

namespace instex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string two_digits(int i) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%02d", i);
    return buffer;
}

json counts_json(const RegionCounts& c) {
    return {{"background", c.background}, {"generate", c.generate}, {"update", c.update}, {"keep", c.keep}};
}

json refine_json(const RefineReport& r) {
    return {{"masked_texels", r.masked_texels},
            {"masked_fraction", r.masked_fraction},
            {"backend_called", r.backend_called},
            {"latency_ms", r.latency_ms},
            {"retries", r.retries}};
}

void check_unit(double value, const char* name) {
    if (!(value >= 0.0 && value <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void dump_view(const fs::path& dir, int index, const SynthesisRequest& req, const RegionMask& mask,
               const RgbImage& output) {
    const std::string prefix = two_digits(index) + "_";
    write_png(dir / (prefix + "depth.png"), wire::normalized_depth(*req.depth, req.depth_near, req.depth_far));
    write_png(dir / (prefix + "mask.png"), region_debug_image(mask));
    if (req.init_image) write_png(dir / (prefix + "init.png"), *req.init_image);
    write_png(dir / (prefix + "output.png"), output);
}

std::size_t unwritten_valid(const TextureAtlas& atlas) { return atlas.count_state(TexelState::Unwritten); }

}  // namespace

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
    if (scene_manifest.empty()) throw ConfigError("no scene manifest given");
    if (atlas_resolution < 1) throw ConfigError("atlas resolution must be positive");
    if (image_resolution < 1) throw ConfigError("image resolution must be positive");
    check_unit(tau_proj, "tau_proj");
    check_unit(tau_update, "tau_update");
    check_unit(tau_refine, "tau_refine");
    if (generate_steps < 0 || update_steps < 0) throw ConfigError("step budgets must be >= 0");
    if (update_steps > generate_steps) throw ConfigError("update steps cannot exceed generate steps");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    for (double step : {object_azimuth_step, room_azimuth_step}) {
        const double count = 360.0 / step;
        if (!(step > 0.0) || std::abs(count - std::round(count)) > 1e-9) {
            throw ConfigError("azimuth steps must be positive and divide 360");
        }
    }
}

json PipelineConfig::to_json() const {
    return {{"scene_manifest", scene_manifest.string()},
            {"style", style},
            {"seed", seed},
            {"backend", backend},
            {"atlas_resolution", atlas_resolution},
            {"image_resolution", image_resolution},
            {"object_azimuth_step", object_azimuth_step},
            {"room_azimuth_step", room_azimuth_step},
            {"tau_proj", tau_proj},
            {"tau_update", tau_update},
            {"tau_refine", tau_refine},
            {"generate_steps", generate_steps},
            {"update_steps", update_steps},
            {"postprocess", postprocess},
            {"output_dir", output_dir.string()},
            {"max_in_flight", max_in_flight},
            {"dump_views", dump_views}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    try {
        c.scene_manifest = j.value("scene_manifest", c.scene_manifest.string());
        c.style = j.value("style", c.style);
        c.seed = j.value("seed", c.seed);
        c.backend = j.value("backend", c.backend);
        c.atlas_resolution = j.value("atlas_resolution", c.atlas_resolution);
        c.image_resolution = j.value("image_resolution", c.image_resolution);
        c.object_azimuth_step = j.value("object_azimuth_step", c.object_azimuth_step);
        c.room_azimuth_step = j.value("room_azimuth_step", c.room_azimuth_step);
        c.tau_proj = j.value("tau_proj", c.tau_proj);
        c.tau_update = j.value("tau_update", c.tau_update);
        c.tau_refine = j.value("tau_refine", c.tau_refine);
        c.generate_steps = j.value("generate_steps", c.generate_steps);
        c.update_steps = j.value("update_steps", c.update_steps);
        c.postprocess = j.value("postprocess", c.postprocess);
        c.output_dir = j.value("output_dir", c.output_dir.string());
        c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
        c.dump_views = j.value("dump_views", c.dump_views);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config json: ") + e.what());
    }
    return c;
}

PartitionPolicy PipelineConfig::partition_policy() const {
    PartitionPolicy p;
    p.update_threshold = tau_update;
    p.generate_steps = generate_steps;
    p.update_steps = update_steps;
    return p;
}

// ---------------------------------------------------------------------------
// Records

json ObjectRecord::to_json() const {
    json views_json = json::array();
    for (const ViewRecord& v : views) {
        views_json.push_back({{"index", v.index},
                              {"viewpoint", instex::to_json(v.viewpoint)},
                              {"seed", v.seed},
                              {"mode", v.mode},
                              {"regions", counts_json(v.regions)},
                              {"steps", v.denoise.steps},
                              {"strength", v.denoise.strength},
                              {"texels_written", v.texels_written},
                              {"texels_skipped", v.texels_skipped},
                              {"latency_ms", v.latency_ms},
                              {"retries", v.retries}});
    }
    json j = {{"id", id},
              {"kind", kind},
              {"name", name},
              {"prompt", prompt},
              {"base_seed", base_seed},
              {"valid_texels", valid_texels},
              {"views", views_json},
              {"kept_after_sweep", kept_after_sweep},
              {"unwritten_after_sweep", unwritten_after_sweep},
              {"refine_seed", refine_seed},
              {"refine", refine_json(refine)},
              {"unwritten_after_refine", unwritten_after_refine},
              {"seam_before_refine", seam_before_refine},
              {"seam_after_refine", seam_after_refine},
              {"wall_ms", wall_ms}};
    if (postprocess) j["postprocess"] = refine_json(*postprocess);
    return j;
}

json RunManifest::to_json() const {
    json objs = json::array();
    for (const ObjectRecord& o : objects) objs.push_back(o.to_json());
    json j = {{"config", config},
              {"style_prompt", style_prompt},
              {"style_image_id", style_image_id},
              {"style_image_hash", style_image_hash},
              {"objects", objs},
              {"eval_renders", eval_renders},
              {"stages", stages},
              {"wall_ms", wall_ms},
              {"exit_code", exit_code()}};
    if (error) j["error"] = {{"stage", error->stage}, {"message", error->message}};
    return j;
}

json strip_timing(const json& j) {
    if (j.is_object()) {
        json out = json::object();
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key().find("latency") != std::string::npos || it.key().find("wall") != std::string::npos) continue;
            out[it.key()] = strip_timing(it.value());
        }
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const json& e : j) out.push_back(strip_timing(e));
        return out;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Prompts, seeds, style

std::string style_prompt(std::string_view style, std::string_view room_type) {
    if (style.empty()) throw ConfigError("empty style prompt");
    if (room_type.empty()) throw ConfigError("empty room type");
    return "a " + std::string(style) + " style " + std::string(room_type);
}

std::string object_prompt(std::string_view style, std::string_view object_name) {
    if (style.empty()) throw ConfigError("empty style prompt");
    if (object_name.empty()) throw ConfigError("empty object name");
    return "a " + std::string(style) + " style " + std::string(object_name);
}

std::uint64_t object_seed(std::uint64_t run_seed, std::string_view object_id) {
    return hash_combine(run_seed, fnv1a64(object_id));
}

StyleImage global_style_image(const std::string& prompt, SynthesisBackend& backend, std::uint64_t seed,
                              Extent resolution) {
    if (prompt.empty()) throw ConfigError("empty style prompt");
    SynthesisRequest req;
    req.mode = SynthesisMode::Text2Img;
    req.prompt = prompt;
    req.seed = seed;
    req.resolution = resolution;
    req.denoise = {50, 1.0};
    SynthesisResponse response = synthesize(req, backend);
    StyleImage out;
    out.content_hash = content_id(response.image);
    out.id = backend.register_style(response.image);
    out.latency_ms = response.latency_ms;
    out.image = std::move(response.image);
    return out;
}

// ---------------------------------------------------------------------------
// Per-object texturing

TexturingResult texture_object(const Mesh& canonical_mesh, TextureAtlas atlas, const TexturingParams& params,
                               SynthesisBackend& backend) {
    const auto start = Clock::now();
    TexturingResult result;
    ObjectRecord& record = result.record;
    record.prompt = params.prompt;
    record.base_seed = params.base_seed;
    record.valid_texels = atlas.valid_count();
    if (params.dump_dir) fs::create_directories(*params.dump_dir);

    const auto notify = [&](std::string_view stage) {
        if (params.observer) params.observer(stage, atlas);
    };

    try {
        for (std::size_t i = 0; i < params.views.size(); ++i) {
            ViewRecord view;
            view.index = static_cast<int>(i);
            view.viewpoint = params.views[i];
            view.seed = params.base_seed + i;
            const Camera camera = camera_matrices(params.views[i], params.intrinsics);
            CorrespondenceMap corr = texel_correspondence(canonical_mesh, atlas, camera, params.cull);
            RegionMask mask = classify_view(atlas, corr, params.policy);
            view.regions = mask.counts();

            if (view.regions.generate + view.regions.update == 0) {
                view.mode = "SKIPPED";
                record.views.push_back(view);
                notify("view");
                continue;
            }

            SynthesisRequest req;
            req.resolution = params.intrinsics.resolution;
            req.depth = corr.depth;
            req.depth_near = params.intrinsics.near_plane;
            req.depth_far = params.intrinsics.far_plane;
            req.prompt = params.prompt;
            req.style_image_id = params.style_image_id;
            req.seed = view.seed;
            const bool fresh = view.regions.generate == view.regions.foreground();
            req.denoise = denoise_policy(view.regions.generate > 0 ? Region::Generate : Region::Update, params.policy);
            if (fresh) {
                req.mode = SynthesisMode::Depth2Img;
            } else {
                req.mode = SynthesisMode::DepthInpaint;
                req.init_image = render_color(canonical_mesh, atlas, camera, params.cull).image;
                req.region_mask = mask;
            }
            view.mode = std::string(to_string(req.mode));
            view.denoise = req.denoise;

            const SynthesisResponse response = synthesize(req, backend);
            view.latency_ms = response.latency_ms;
            view.retries = response.retries;
            const ProjectionReport projected = project_image(response.image, corr, mask, atlas, params.tau_proj);
            view.texels_written = projected.texels_written;
            view.texels_skipped = projected.texels_skipped;
            if (params.dump_dir) dump_view(*params.dump_dir, view.index, req, mask, response.image);
            record.views.push_back(view);
            notify("view");
        }

        finalize_object(atlas);
        record.kept_after_sweep = atlas.count_state(TexelState::Kept);
        record.unwritten_after_sweep = unwritten_valid(atlas);
        record.seam_before_refine = seam_consistency_metric(canonical_mesh, atlas);
        notify("finalize");

        const PositionMap pmap = position_map(canonical_mesh, atlas);
        const Grid<std::uint8_t> mask = inpaint_mask(atlas, params.tau_refine);
        RefineParams refine;
        refine.prompt = params.prompt;
        refine.style_image_id = params.style_image_id;
        refine.seed = params.base_seed + params.views.size();
        refine.tau_refine = params.tau_refine;
        refine.denoise = denoise_policy(Region::Generate, params.policy);
        record.refine_seed = refine.seed;
        atlas = refine_texture(atlas, pmap, mask, refine, backend, &record.refine);
        record.unwritten_after_refine = unwritten_valid(atlas);
        record.seam_after_refine = seam_consistency_metric(canonical_mesh, atlas);
        notify("refine");
    } catch (const BackendError&) {
        if (params.dump_dir) write_png(*params.dump_dir / "partial_atlas.png", atlas.color);
        throw;
    }
    record.wall_ms = elapsed_ms(start);
    result.atlas = std::move(atlas);
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation

Vec3 eval_center(const SceneGraph& scene) {
    BoundingBox box;
    const auto& source = scene.rooms.empty() ? scene.objects : scene.rooms;
    const std::size_t count = scene.rooms.empty() ? source.size() : 1;
    for (std::size_t i = 0; i < count; ++i) {
        for (const Vec3& v : source[i].mesh.vertices) box.extend(v);
    }
    return box.valid() ? box.center() : Vec3::Zero();
}

std::vector<RgbImage> eval_renders(const SceneGraph& scene, Extent resolution) {
    std::vector<SceneItem> items;
    BoundingBox box;
    for (const SceneObject* obj : scene.all()) {
        if (!obj->atlas) throw GeometryError("eval_renders: object " + obj->id + " has no atlas");
        items.push_back({&obj->mesh, &*obj->atlas, obj->kind == ObjectKind::Room ? CullMode::Front : CullMode::Back});
        for (const Vec3& v : obj->mesh.vertices) box.extend(v);
    }
    CameraIntrinsics k;
    k.resolution = resolution;
    k.far_plane = std::max(10.0, 4.0 * box.diagonal());
    std::vector<RgbImage> renders;
    for (const Viewpoint& v : eval_viewpoints(eval_center(scene))) {
        renders.push_back(render_scene_color(items, camera_matrices(v, k)).image);
    }
    return renders;
}

double seam_consistency_metric(const Mesh& mesh, const TextureAtlas& atlas) {
    constexpr int kSamples = 8;
    if (!mesh.has_uvs()) return 0.0;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::pair<std::size_t, int>>> edges;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const std::uint32_t a = mesh.triangles[t][k];
            const std::uint32_t b = mesh.triangles[t][(k + 1) % 3];
            edges[{std::min(a, b), std::max(a, b)}].push_back({t, k});
        }
    }
    const double nudge = 0.5 / std::max(atlas.extent().width, atlas.extent().height);
    const auto side = [&](std::size_t t, int k, std::uint32_t first) {
        const auto uv = mesh.uv_corners(t);
        Vec2 start = uv[k];
        Vec2 end = uv[(k + 1) % 3];
        if (mesh.triangles[t][k] != first) std::swap(start, end);
        const Vec2 centroid = (uv[0] + uv[1] + uv[2]) / 3.0;
        return std::array<Vec2, 3>{start, end, centroid};
    };
    double total = 0.0;
    std::size_t samples = 0;
    for (const auto& [key, users] : edges) {
        if (users.size() != 2) continue;
        const auto [t1, k1] = users[0];
        const auto [t2, k2] = users[1];
        const auto s1 = side(t1, k1, key.first);
        const auto s2 = side(t2, k2, key.first);
        if ((s1[0] - s2[0]).norm() < 1e-9 && (s1[1] - s2[1]).norm() < 1e-9) continue;
        for (int s = 0; s < kSamples; ++s) {
            const double f = (s + 0.5) / kSamples;
            Vec2 p1 = s1[0] + f * (s1[1] - s1[0]);
            Vec2 p2 = s2[0] + f * (s2[1] - s2[0]);
            if ((s1[2] - p1).norm() > 0.0) p1 += nudge * (s1[2] - p1).normalized();
            if ((s2[2] - p2).norm() > 0.0) p2 += nudge * (s2[2] - p2).normalized();
            const auto q1 = nearest_valid_texel(atlas, p1, static_cast<std::int32_t>(t1));
            const auto q2 = nearest_valid_texel(atlas, p2, static_cast<std::int32_t>(t2));
            if (!q1 || !q2) continue;
            const Rgb8 c1 = atlas.color[*q1];
            const Rgb8 c2 = atlas.color[*q2];
            total += (std::abs(c1.r - c2.r) + std::abs(c1.g - c2.g) + std::abs(c1.b - c2.b)) / 3.0;
            ++samples;
        }
    }
    return samples ? total / static_cast<double>(samples) : 0.0;
}

std::vector<std::string> write_eval_renders(const SceneGraph& scene, Extent resolution, const fs::path& out_dir) {
    fs::create_directories(out_dir / "scene");
    const std::vector<RgbImage> renders = eval_renders(scene, resolution);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < renders.size(); ++i) {
        const std::string name = "scene/eval_" + two_digits(static_cast<int>(i)) + ".png";
        write_png(out_dir / name, renders[i]);
        names.push_back(name);
    }
    return names;
}

SceneGraph load_run_scene(const fs::path& out_dir) {
    const fs::path scene_dir = out_dir / "scene";
    std::ifstream in(scene_dir / "scene.json");
    if (!in) throw ConfigError("not a run output directory (missing scene/scene.json): " + out_dir.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad scene.json: ") + e.what());
    }
    SceneGraph scene;
    scene.style = j.value("style", std::string());
    scene.room_type = j.value("room_type", scene.room_type);
    for (const json& entry : j.at("objects")) {
        SceneObject obj;
        obj.id = entry.at("id").get<std::string>();
        obj.kind = entry.value("kind", std::string("object")) == "room" ? ObjectKind::Room : ObjectKind::Furniture;
        obj.mesh_path = scene_dir / entry.at("mesh").get<std::string>();
        obj.mesh = load_mesh(obj.mesh_path, &obj.load_report);
        const fs::path dir = obj.mesh_path.parent_path();
        const RgbImage color = decode_png_rgb(read_file(dir / "atlas.png"));
        const Grid<std::uint8_t> states = decode_png_gray(read_file(dir / "state.png"));
        TextureAtlas atlas = new_atlas(obj.mesh, color.extent());
        if (states.extent() != color.extent()) throw ConfigError("state.png does not match atlas.png for " + obj.id);
        atlas.color = color;
        for (std::size_t i = 0; i < states.size(); ++i) {
            atlas.state[i] = state_from_gray(states[i]);
            atlas.confidence[i] = atlas.state[i] == TexelState::Unwritten ? 0.0f : 1.0f;
        }
        obj.atlas = std::move(atlas);
        (obj.kind == ObjectKind::Room ? scene.rooms : scene.objects).push_back(std::move(obj));
    }
    return scene;
}

// ---------------------------------------------------------------------------
// Full run

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const BackendError*>(&e)) return 3;
    if (dynamic_cast<const GeometryError*>(&e)) return 4;
    return 1;
}

namespace {

struct ObjectJob {
    const SceneObject* object = nullptr;
    CanonicalMesh canonical;
    std::optional<TexturingResult> result;
    std::exception_ptr error;
};

void write_object(const fs::path& dir, const SceneObject& obj, const TextureAtlas& atlas, const PositionMap& pmap) {
    fs::create_directories(dir);
    write_png(dir / "atlas.png", atlas.color);
    write_png(dir / "state.png", state_image(atlas));
    write_png(dir / "position.png", position_debug_image(pmap));
    save_obj(obj.mesh, dir / "mesh.obj", "instex_" + obj.id);
    write_text(dir / "mesh.mtl", "newmtl instex_" + obj.id + "\nKd 1 1 1\nmap_Kd atlas.png\n");
}

json scene_json(const SceneGraph& scene, const std::map<std::string, TexturedObject>& textured) {
    json objs = json::array();
    for (const SceneObject* obj : scene.all()) {
        const Placement& p = textured.at(obj->id).placement;
        objs.push_back({{"id", obj->id},
                        {"kind", obj->kind == ObjectKind::Room ? "room" : "object"},
                        {"mesh", "../objects/" + obj->id + "/mesh.obj"},
                        {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}},
                        {"scale", p.scale},
                        {"rotation_quat", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}}});
    }
    return {{"style", scene.style}, {"room_type", scene.room_type}, {"objects", objs}};
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config, SynthesisBackend* backend_override) {
    const auto start = Clock::now();
    RunManifest manifest;
    manifest.config = config.to_json();
    std::string stage = "config";
    const fs::path out = config.output_dir;
    try {
        config.validate();
        std::unique_ptr<SynthesisBackend> owned;
        SynthesisBackend* backend = backend_override;
        if (backend == nullptr) {
            owned = make_backend(config.backend);
            backend = owned.get();
        }
        BoundedBackend bounded(*backend, config.max_in_flight);
        fs::create_directories(out);
        manifest.stages.push_back(stage);

        stage = "scene";
        SceneGraph scene = load_scene(config.scene_manifest);
        check_scene_invariants(scene);
        manifest.stages.push_back(stage);

        stage = "style";
        const std::string style = config.style.empty() ? scene.style : config.style;
        manifest.style_prompt = style_prompt(style, scene.room_type);
        const Extent image_extent{config.image_resolution, config.image_resolution};
        const StyleImage style_image = global_style_image(manifest.style_prompt, bounded, config.seed, image_extent);
        manifest.style_image_id = style_image.id;
        manifest.style_image_hash = style_image.content_hash;
        write_png(out / "style_image.png", style_image.image);
        manifest.stages.push_back(stage);

        stage = "texture";
        const std::vector<const SceneObject*> all = scene.all();
        std::vector<ObjectJob> jobs(all.size());
        for (std::size_t i = 0; i < all.size(); ++i) jobs[i].object = all[i];
        const Extent atlas_extent{config.atlas_resolution, config.atlas_resolution};
        const auto run_job = [&](ObjectJob& job) {
            try {
                const SceneObject& obj = *job.object;
                const bool room = obj.kind == ObjectKind::Room;
                job.canonical = canonicalize(obj.mesh, obj.transform.rotation);
                TexturingParams params;
                params.prompt = room ? manifest.style_prompt : object_prompt(style, obj.name.empty() ? obj.id : obj.name);
                params.style_image_id = style_image.id;
                params.base_seed = object_seed(config.seed, obj.id);
                params.views = room ? room_viewpoints(config.room_azimuth_step) : object_viewpoints(config.object_azimuth_step);
                params.cull = room ? CullMode::Front : CullMode::Back;
                params.intrinsics.resolution = image_extent;
                params.policy = config.partition_policy();
                params.tau_proj = config.tau_proj;
                params.tau_refine = config.tau_refine;
                if (config.dump_views) params.dump_dir = out / "objects" / obj.id / "views";
                job.result = texture_object(job.canonical.mesh, new_atlas(job.canonical.mesh, atlas_extent), params,
                                            bounded);
                job.result->record.id = obj.id;
                job.result->record.kind = room ? "room" : "object";
                job.result->record.name = obj.name;
            } catch (...) {
                job.error = std::current_exception();
            }
        };
        std::atomic<std::size_t> next{0};
        const auto worker = [&] {
            for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(jobs[i]);
        };
        const std::size_t thread_count = std::min<std::size_t>(static_cast<std::size_t>(config.max_in_flight), jobs.size());
        std::vector<std::thread> threads;
        for (std::size_t t = 1; t < thread_count; ++t) threads.emplace_back(worker);
        worker();
        for (std::thread& t : threads) t.join();
        for (ObjectJob& job : jobs) {
            if (!job.error) continue;
            try {
                std::rethrow_exception(job.error);
            } catch (...) {
                stage = "texture:" + job.object->id;
                throw;
            }
        }
        for (ObjectJob& job : jobs) manifest.objects.push_back(job.result->record);
        manifest.stages.push_back("texture");

        stage = "recompose";
        std::map<std::string, TexturedObject> textured;
        for (ObjectJob& job : jobs) {
            textured[job.object->id] = {job.canonical.mesh, job.canonical.placement, std::move(job.result->atlas)};
        }
        SceneGraph recomposed = recompose(scene, textured);
        manifest.stages.push_back(stage);

        stage = "postprocess";
        std::map<std::string, PositionMap> pmaps;
        for (auto& [id, obj] : textured) pmaps[id] = position_map(obj.canonical, obj.atlas);
        if (config.postprocess) {
            for (std::size_t i = 0; i < all.size(); ++i) {
                const std::string& id = all[i]->id;
                TexturedObject& obj = textured.at(id);
                RefineParams params;
                params.prompt = manifest.objects[i].prompt;
                params.style_image_id = style_image.id;
                params.seed = manifest.objects[i].refine_seed + 1;
                RefineReport report;
                obj.atlas = postprocess_atlas(obj.atlas, pmaps.at(id), params, bounded, &report);
                manifest.objects[i].postprocess = report;
            }
            recomposed = recompose(scene, textured);
        }
        manifest.stages.push_back(stage);

        stage = "write";
        for (const SceneObject* obj : recomposed.all()) {
            write_object(out / "objects" / obj->id, *obj, *obj->atlas, pmaps.at(obj->id));
        }
        manifest.stages.push_back(stage);

        stage = "eval";
        manifest.eval_renders = write_eval_renders(recomposed, image_extent, out);
        write_text(out / "scene" / "scene.json", scene_json(recomposed, textured).dump(2) + "\n");
        manifest.stages.push_back(stage);
    } catch (const std::exception& e) {
        manifest.error = RunError{stage, e.what(), exit_code_for(e)};
    }
    manifest.wall_ms = elapsed_ms(start);
    std::error_code ec;
    if (fs::is_directory(out, ec)) {
        try {
            write_text(out / "manifest.json", manifest.to_json().dump(2) + "\n");
        } catch (const std::exception&) {
        }
    }
    return manifest;
}

}  // namespace instex
