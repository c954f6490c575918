#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "instex/errors.hpp"
#include "instex/pipeline.hpp"
#include "instex/views.hpp"

namespace {

using namespace instex;
namespace fs = std::filesystem;

std::string default_backend() {
    const char* env = std::getenv("INSTEX_BACKEND_URL");
    return env != nullptr && *env != '\0' ? env : "stub";
}

int print_manifest_summary(const RunManifest& manifest) {
    if (manifest.error) {
        std::cerr << "instex: failed at stage " << manifest.error->stage << ": " << manifest.error->message << "\n";
        return manifest.exit_code();
    }
    std::cout << "style: " << manifest.style_prompt << " (" << manifest.style_image_id << ")\n";
    for (const ObjectRecord& o : manifest.objects) {
        std::cout << o.kind << " " << o.id << ": " << o.views.size() << " views, " << o.kept_after_sweep << "/"
                  << o.valid_texels << " texels kept after sweep, " << o.unwritten_after_refine
                  << " unwritten after refine\n";
    }
    std::cout << manifest.eval_renders.size() << " eval renders\n";
    return 0;
}

int run_views(const std::string& kind, double step, const std::string& out) {
    std::vector<Viewpoint> views;
    if (kind == "object") {
        views = object_viewpoints(step);
    } else if (kind == "room") {
        views = room_viewpoints(step);
    } else if (kind == "eval") {
        views = eval_viewpoints();
    } else {
        throw ConfigError("unknown schedule kind: " + kind);
    }
    const std::string text = schedule_json(views).dump(2) + "\n";
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        std::ofstream f(out);
        if (!f) throw ConfigError("cannot write " + out);
        f << text;
    }
    return 0;
}

int run_eval(const fs::path& dir, int image) {
    const SceneGraph scene = load_run_scene(dir);
    const auto names = write_eval_renders(scene, {image, image}, dir);
    std::cout << names.size() << " eval renders written to " << (dir / "scene").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"instex: scene texture synthesis engine"};
    app.require_subcommand(1);

    PipelineConfig config;
    config.backend = default_backend();
    std::string scene_path;
    std::string out_dir = "out";
    std::string replay;
    bool no_dumps = false;
    CLI::App* run = app.add_subcommand("run", "texture a scene end to end");
    run->add_option("--scene", scene_path, "scene manifest (JSON)");
    run->add_option("--style", config.style, "style text, e.g. Baroque");
    run->add_option("--backend", config.backend, "stub or http://host:port (default: $INSTEX_BACKEND_URL or stub)");
    run->add_option("--seed", config.seed, "run seed");
    run->add_option("--atlas", config.atlas_resolution, "atlas resolution")->capture_default_str();
    run->add_option("--img", config.image_resolution, "view image resolution")->capture_default_str();
    run->add_option("--room-step", config.room_azimuth_step, "room panorama azimuth step")->capture_default_str();
    run->add_option("--max-in-flight", config.max_in_flight, "concurrent backend requests")->capture_default_str();
    run->add_flag("--postprocess", config.postprocess, "run the final low-strength scene pass");
    run->add_flag("--no-view-dumps", no_dumps, "skip per-view debug images");
    auto* out_opt = run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_option("--replay", replay, "take the configuration from an earlier manifest.json");

    std::string view_kind = "object";
    double view_step = 45.0;
    std::string view_out;
    bool dump = false;
    CLI::App* views = app.add_subcommand("views", "print a viewpoint schedule");
    views->add_flag("--dump", dump, "write the schedule as JSON");
    views->add_option("--kind", view_kind, "object, room or eval")->capture_default_str();
    views->add_option("--step", view_step, "azimuth step")->capture_default_str();
    views->add_option("--out", view_out, "file to write (default stdout)");

    std::string scene_dir;
    int eval_img = 512;
    CLI::App* eval = app.add_subcommand("eval", "re-render the 20 evaluation views of a finished run");
    eval->add_option("--scene-dir", scene_dir, "run output directory")->required();
    eval->add_option("--img", eval_img, "render resolution")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            if (!replay.empty()) {
                std::ifstream in(replay);
                if (!in) throw ConfigError("cannot read " + replay);
                config = PipelineConfig::from_json(nlohmann::json::parse(in).at("config"));
                if (out_opt->count() > 0) config.output_dir = out_dir;
            } else {
                config.scene_manifest = scene_path;
                config.output_dir = out_dir;
                config.dump_views = !no_dumps;
            }
            return print_manifest_summary(run_pipeline(config));
        }
        if (*views) {
            if (!dump) std::cerr << "instex views: printing schedule (use --dump to be explicit)\n";
            return run_views(view_kind, view_step, view_out);
        }
        if (*eval) return run_eval(scene_dir, eval_img);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "instex: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "instex: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "instex: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
