#include <doctest.h>

#include <random>

#include "instex/back_project.hpp"
#include "instex/partition.hpp"
#include "instex/synthesis.hpp"
#include "testkit.hpp"

using namespace instex;

namespace {

CameraIntrinsics camera(int size) {
    CameraIntrinsics k;
    k.resolution = {size, size};
    return k;
}

}  // namespace

TEST_CASE("denoise policy budgets") {
    CHECK(denoise_policy(Region::Generate) == DenoiseSpec{50, 1.0});
    CHECK(denoise_policy(Region::Update) == DenoiseSpec{10, 0.2});
    CHECK(denoise_policy(Region::Keep) == DenoiseSpec{0, 0.0});
    CHECK_THROWS_AS(denoise_policy(Region::Background), std::invalid_argument);
    PartitionPolicy p;
    p.generate_steps = 40;
    p.update_steps = 20;
    CHECK(denoise_policy(Region::Update, p) == DenoiseSpec{20, 0.5});
}

TEST_CASE("classification rules per pixel") {
    const Mesh sphere = testkit::uv_sphere();
    TextureAtlas atlas = new_atlas(sphere, {64, 64});
    const Camera cam = camera_matrices(object_viewpoints()[0], camera(64));
    const CorrespondenceMap corr = texel_correspondence(sphere, atlas, cam);

    // Write every texel with confidence 0.3: pixels seen head-on become UPDATE.
    for (std::size_t i = 0; i < atlas.valid.size(); ++i) {
        if (!atlas.valid[i]) continue;
        atlas.state[i] = TexelState::Kept;
        atlas.confidence[i] = 0.3f;
    }
    const RegionMask mask = classify_view(atlas, corr);
    const RegionCounts c = mask.counts();
    CHECK(c.generate == 0);
    CHECK(c.update > 0);
    for (std::size_t i = 0; i < mask.region.size(); ++i) {
        if (mask.region[i] == Region::Background) continue;
        const TexelVisibility& vis = corr.texels[static_cast<std::size_t>(corr.pixels[i].texel)];
        REQUIRE(vis.visible);
        if (mask.region[i] == Region::Update) CHECK(vis.cosine > 0.5f);
        if (mask.region[i] == Region::Keep) CHECK(vis.cosine <= 0.5f);
    }

    // One unwritten texel under a pixel makes a GENERATE seed ringed by UPDATE.
    for (std::size_t i = 0; i < atlas.valid.size(); ++i) atlas.confidence[i] = 0.9f;
    const std::size_t center = corr.pixels.index(32, 32);
    const auto t = static_cast<std::size_t>(corr.pixels[center].texel);
    atlas.state[t] = TexelState::Unwritten;
    atlas.confidence[t] = 0.0f;
    const RegionMask ringed = classify_view(atlas, corr);
    CHECK(ringed.region(32, 32) == Region::Generate);
    std::vector<std::pair<int, int>> seeds;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            if (ringed.region(x, y) == Region::Generate) {
                seeds.emplace_back(x, y);
                CHECK(corr.pixels(x, y).texel == static_cast<std::int32_t>(t));
            }
        }
    }
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const Region r = ringed.region(x, y);
            if (r == Region::Background || r == Region::Generate) continue;
            int d = 64;
            for (const auto& [sx, sy] : seeds) d = std::min(d, std::max(std::abs(x - sx), std::abs(y - sy)));
            CHECK(r == (d <= 3 ? Region::Update : Region::Keep));
        }
    }

    TextureAtlas other = new_atlas(sphere, {32, 32});
    CHECK_THROWS_AS(classify_view(other, corr), std::invalid_argument);
}

TEST_CASE("partition soundness on randomized atlas states and views") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::vector<Mesh> meshes = {testkit::uv_sphere(), testkit::uv_sphere(0.45, 24, 12),
                                      testkit::uv_sphere(0.5, 16, 7)};
    StubBackend stub;
    for (int trial = 0; trial < 100; ++trial) {
        CAPTURE(trial);
        const Mesh& mesh = meshes[trial % meshes.size()];
        TextureAtlas atlas = new_atlas(mesh, {48, 48});
        const Viewpoint v{unit(rng) * 360.0, unit(rng) * 180.0 - 90.0, 1.0, Vec3::Zero(), ViewKind::ObjectOrbit};
        const Camera cam = camera_matrices(v, camera(64));
        const CorrespondenceMap corr = texel_correspondence(mesh, atlas, cam);

        const RegionMask fresh = classify_view(atlas, corr);
        const RegionCounts fc = fresh.counts();
        CHECK(fc.generate == corr.depth.foreground_count());
        CHECK(fc.update + fc.keep == 0);

        const double written_fraction = unit(rng);
        for (std::size_t i = 0; i < atlas.valid.size(); ++i) {
            if (!atlas.valid[i] || unit(rng) > written_fraction) continue;
            atlas.state[i] = unit(rng) < 0.5 ? TexelState::Kept : TexelState::Generated;
            atlas.confidence[i] = static_cast<float>(0.01 + 0.99 * unit(rng));
        }
        const RegionMask mask = classify_view(atlas, corr);
        const RegionCounts c = mask.counts();
        CHECK(c.background + c.foreground() == mask.region.size());
        for (std::size_t i = 0; i < mask.region.size(); ++i) {
            const Region r = mask.region[i];
            CHECK((r == Region::Background) == (corr.depth.foreground[i] == 0));
            CHECK(static_cast<int>(r) <= 3);
        }

        // Process the view, then look again from the same camera.
        SynthesisRequest req;
        req.mode = SynthesisMode::DepthInpaint;
        req.resolution = corr.image;
        req.depth = corr.depth;
        req.region_mask = mask;
        req.init_image = render_color(mesh, atlas, cam).image;
        req.prompt = "a test";
        req.seed = static_cast<std::uint64_t>(trial);
        req.denoise = denoise_policy(Region::Generate);
        project_image(synthesize(req, stub).image, corr, mask, atlas);
        const RegionMask repeat = classify_view(atlas, texel_correspondence(mesh, atlas, cam));
        const RegionCounts rc = repeat.counts();
        CHECK(rc.keep == rc.foreground());
    }
}

TEST_CASE("region debug palette round trip") {
    RegionMask m{Grid<Region>({1, 4}, Region::Background)};
    m.region[1] = Region::Generate;
    m.region[2] = Region::Update;
    m.region[3] = Region::Keep;
    const auto img = region_debug_image(m);
    CHECK(img[0] == 0);
    CHECK(img[1] == 255);
    CHECK(img[2] == 128);
    CHECK(img[3] == 64);
    for (std::size_t i = 0; i < 4; ++i) CHECK(region_from_gray(img[i]) == m.region[i]);
}
