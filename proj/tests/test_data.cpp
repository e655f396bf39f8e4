#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trajpred/data.hpp"

using namespace trajpred;

namespace {

std::string fixture(const std::string& name) {
    return std::string(TRAJPRED_FIXTURES) + "/" + name;
}

std::vector<unsigned char> file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(is)),
                                      std::istreambuf_iterator<char>());
}

/// Straight-line track on the frame grid, 0.4 s per step.
Trajectory straight_track(long long id, std::size_t n, Vec2 start, Vec2 step,
                          long long frame0 = 0) {
    Trajectory t;
    t.agent_id = id;
    t.units = Units::meters;
    for (std::size_t k = 0; k < n; ++k) {
        TrackPoint p;
        p.frame = frame0 + static_cast<long long>(k);
        p.t = static_cast<double>(p.frame) * kTimeStep;
        p.pos = start + step * static_cast<double>(k);
        t.points.push_back(p);
    }
    return t;
}

} // namespace

TEST_CASE("two rows for one id form a two-point trajectory") {
    std::istringstream is("0 4 1.0 2.0\n10 4 1.5 2.0\n");
    auto tracks = parse_eth_ucy(is);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].agent_id == 4);
    REQUIRE(tracks[0].points.size() == 2);
    CHECK(tracks[0].points[0].pos.x == 1.0);
    CHECK(tracks[0].points[1].t - tracks[0].points[0].t == Approx(kTimeStep));
}

TEST_CASE("identity homography passes coordinates through") {
    std::istringstream a("0 1 3.25 -2.5\n");
    std::istringstream b("0 1 3.25 -2.5\n");
    auto plain = parse_eth_ucy(a);
    auto mapped = parse_eth_ucy(b, Homography::identity());
    CHECK(plain[0].points[0].pos.x == mapped[0].points[0].pos.x);
    CHECK(plain[0].points[0].pos.y == mapped[0].points[0].pos.y);
}

TEST_CASE("scaling homography from file halves coordinates") {
    auto h = parse_homography_file(fixture("homography_scale.txt"));
    std::istringstream is("0 1 4.0 -6.0\n");
    auto tracks = parse_eth_ucy(is, h);
    CHECK(tracks[0].points[0].pos.x == Approx(2.0));
    CHECK(tracks[0].points[0].pos.y == Approx(-3.0));
}

TEST_CASE("eth/ucy fixture parses to three ten-point trajectories") {
    auto tracks = parse_eth_ucy_file(fixture("ethucy_small.txt"));
    REQUIRE(tracks.size() == 3);
    for (const auto& t : tracks) {
        CHECK(t.points.size() == 10);
        CHECK(t.units == Units::meters);
        t.validate();
    }
    CHECK(tracks[0].agent_id == 1);
    CHECK(tracks[2].agent_id == 3);
    CHECK(tracks[2].points[9].pos.x == Approx(3.7));
}

TEST_CASE("malformed rows report the line number") {
    try {
        parse_eth_ucy_file(fixture("ethucy_malformed.txt"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("duplicate frames for an id are a data error") {
    CHECK_THROWS_AS(parse_eth_ucy_file(fixture("ethucy_nonmono.txt")), DataError);
}

TEST_CASE("frame gaps split a track into contiguous segments") {
    std::istringstream is("0 1 0.0 0.0\n10 1 0.4 0.0\n40 1 1.6 0.0\n50 1 2.0 0.0\n");
    auto tracks = parse_eth_ucy(is);
    REQUIRE(tracks.size() == 2);
    CHECK(tracks[0].points.size() == 2);
    CHECK(tracks[1].points.size() == 2);
    CHECK(tracks[1].points[0].frame == 40);
}

TEST_CASE("sdd rows with the lost flag are excluded and boxes become centers") {
    std::istringstream is("9 0 0 10 10 0 1 0 0 \"Pedestrian\"\n9 0 0 10 10 12 0 0 0 \"Pedestrian\"\n");
    auto tracks = parse_sdd(is);
    REQUIRE(tracks.size() == 1);
    REQUIRE(tracks[0].points.size() == 1);
    CHECK(tracks[0].points[0].pos.x == Approx(5.0));
    CHECK(tracks[0].points[0].pos.y == Approx(5.0));
    CHECK(tracks[0].units == Units::pixels);
}

TEST_CASE("sdd fixture honors class filters, flags and subsampling") {
    SECTION("default pedestrian-only filters") {
        auto tracks = parse_sdd_file(fixture("sdd_small.txt"));
        // id 0: frames 0,12,24,36 survive (frame 6 off-grid; occluded kept);
        // id 1: lost row at frame 24 makes two 2-point segments.
        REQUIRE(tracks.size() == 3);
        CHECK(tracks[0].agent_id == 0);
        CHECK(tracks[0].points.size() == 4);
        CHECK(tracks[1].points.size() == 2);
        CHECK(tracks[2].points.size() == 2);
        CHECK(tracks[2].points[0].frame == 36);
    }
    SECTION("keeping bikers adds their track") {
        SddOptions opts;
        opts.keep_classes = {"Pedestrian", "Biker"};
        auto tracks = parse_sdd_file(fixture("sdd_small.txt"), opts);
        REQUIRE(tracks.size() == 4);
        CHECK(tracks[3].agent_id == 2);
        CHECK(tracks[3].label == "Biker");
    }
    SECTION("dropping occluded removes the frame-24 point of id 0") {
        SddOptions opts;
        opts.drop_flags = {"lost", "occluded"};
        auto tracks = parse_sdd_file(fixture("sdd_small.txt"), opts);
        // id 0 splits around the occluded frame 24: {0,12} and {36}
        REQUIRE(tracks.size() == 4);
        CHECK(tracks[0].points.size() == 2);
        CHECK(tracks[1].points.size() == 1);
    }
}

TEST_CASE("unknown sdd labels are reported") {
    try {
        parse_sdd_file(fixture("sdd_unknown_label.txt"));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("Dragon") != std::string::npos);
    }
}

TEST_CASE("a single agent with exactly 20 steps yields one neighborless scene") {
    std::vector<Trajectory> tracks = {straight_track(1, 20, {0, 0}, {0.5, 0})};
    auto scenes = build_scenes(tracks);
    REQUIRE(scenes.size() == 1);
    CHECK(scenes[0].neighbors.empty());
    CHECK(scenes[0].observed.size() == 8);
    CHECK(scenes[0].future.size() == 12);
    scenes[0].validate();
}

TEST_CASE("nineteen steps are not enough for a scene") {
    std::vector<Trajectory> tracks = {straight_track(1, 19, {0, 0}, {0.5, 0})};
    CHECK(build_scenes(tracks).empty());
}

TEST_CASE("two overlapping 25-step agents produce 6 windows each with one neighbor") {
    std::vector<Trajectory> tracks = {straight_track(1, 25, {0, 0}, {0.5, 0}),
                                      straight_track(2, 25, {10, 0}, {0, 0.5})};
    auto scenes = build_scenes(tracks);
    REQUIRE(scenes.size() == 12);
    for (const auto& s : scenes) {
        REQUIRE(s.neighbors.size() == 1);
        CHECK(s.neighbors[0].agent_id == (s.agent_id == 1 ? 2 : 1));
        for (auto v : s.neighbors[0].valid) CHECK(v == 1);
    }
    // windows advance one step at a time
    CHECK(scenes[0].start_frame == 0);
    CHECK(scenes[1].start_frame == 1);
    CHECK(scenes[5].start_frame == 5);
}

TEST_CASE("scene stride is configurable") {
    std::vector<Trajectory> tracks = {straight_track(1, 25, {0, 0}, {0.5, 0})};
    SceneBuildOptions opts;
    opts.stride = 2;
    auto scenes = build_scenes(tracks, opts);
    CHECK(scenes.size() == 3);
}

TEST_CASE("partially covering neighbors are padded with a validity mask") {
    std::vector<Trajectory> tracks = {straight_track(1, 20, {0, 0}, {0.5, 0}),
                                      straight_track(2, 3, {5, 5}, {0, 0.5}, 5)};
    auto scenes = build_scenes(tracks);
    REQUIRE(scenes.size() == 1);
    REQUIRE(scenes[0].neighbors.size() == 1);
    const auto& n = scenes[0].neighbors[0];
    const std::vector<std::uint8_t> expect_valid = {0, 0, 0, 0, 0, 1, 1, 1};
    CHECK(n.valid == expect_valid);
    // padded steps repeat the nearest observed neighbor point
    CHECK(n.points[0].pos.x == Approx(5.0));
    CHECK(n.points[0].pos.y == Approx(5.0));
    CHECK(n.points[7].pos.y == Approx(6.0));
    scenes[0].validate();
}

TEST_CASE("scene validation rejects malformed scenes") {
    std::vector<Trajectory> tracks = {straight_track(1, 20, {0, 0}, {0.5, 0})};
    auto scenes = build_scenes(tracks);
    Scene bad = scenes[0];
    bad.future.pop_back();
    CHECK_THROWS_AS(bad.validate(), DataError);

    Scene self = scenes[0];
    NeighborTrack n;
    n.agent_id = self.agent_id;
    n.points = self.observed;
    n.valid.assign(8, 1);
    self.neighbors.push_back(n);
    CHECK_THROWS_AS(self.validate(), DataError);
}

TEST_CASE("loocv produces one disjoint exhaustive fold per dataset") {
    std::map<std::string, std::vector<Scene>> datasets;
    const std::vector<std::string> names = {"ETH", "Hotel", "Univ", "Zara1", "Zara2"};
    std::size_t total = 0;
    for (std::size_t d = 0; d < names.size(); ++d) {
        std::vector<Trajectory> tracks = {
            straight_track(static_cast<long long>(d), 20 + d, {0, 0}, {0.5, 0})};
        SceneBuildOptions opts;
        opts.dataset = names[d];
        datasets[names[d]] = build_scenes(tracks, opts);
        total += datasets[names[d]].size();
    }

    auto folds = loocv_splits(datasets);
    REQUIRE(folds.size() == 5);
    for (const auto& fold : folds) {
        CHECK(fold.test.size() == datasets[fold.name].size());
        CHECK(fold.train.size() + fold.test.size() == total);
        for (const auto& s : fold.train) CHECK(s.dataset != fold.name);
        for (const auto& s : fold.test) CHECK(s.dataset == fold.name);
    }
}

TEST_CASE("loocv needs at least two datasets") {
    std::map<std::string, std::vector<Scene>> one;
    one["solo"] = {};
    CHECK_THROWS_AS(loocv_splits(one), ConfigError);
}

TEST_CASE("parse and build are deterministic byte-for-byte") {
    const std::string cache_a =
        (std::filesystem::temp_directory_path() / "trajpred_cache_a.bin").string();
    const std::string cache_b =
        (std::filesystem::temp_directory_path() / "trajpred_cache_b.bin").string();
    for (const std::string& path : {cache_a, cache_b}) {
        auto tracks = parse_eth_ucy_file(fixture("dataset_root/synth1/annotations.txt"));
        SceneBuildOptions opts;
        opts.dataset = "synth1";
        save_scene_cache(path, build_scenes(tracks, opts));
    }
    CHECK(file_bytes(cache_a) == file_bytes(cache_b));
    std::remove(cache_a.c_str());
    std::remove(cache_b.c_str());
}

TEST_CASE("scene cache round-trips scenes and shared images") {
    auto image = std::make_shared<BevImage>(8, 8);
    image->at(3, 4, 1) = 0.5f;
    image->meters_per_pixel = 0.2;
    image->origin = {-1.0, -2.0};

    std::vector<Trajectory> tracks = {straight_track(1, 21, {0, 0}, {0.5, 0}),
                                      straight_track(2, 21, {1, 1}, {0, 0.5})};
    SceneBuildOptions opts;
    opts.dataset = "roundtrip";
    opts.image = image;
    auto scenes = build_scenes(tracks, opts);
    REQUIRE(scenes.size() == 4);

    const std::string path =
        (std::filesystem::temp_directory_path() / "trajpred_cache_rt.bin").string();
    save_scene_cache(path, scenes);
    auto back = load_scene_cache(path);
    std::remove(path.c_str());

    REQUIRE(back.size() == scenes.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].dataset == scenes[i].dataset);
        CHECK(back[i].agent_id == scenes[i].agent_id);
        CHECK(back[i].start_frame == scenes[i].start_frame);
        CHECK(back[i].units == scenes[i].units);
        REQUIRE(back[i].observed.size() == scenes[i].observed.size());
        for (std::size_t k = 0; k < scenes[i].observed.size(); ++k) {
            CHECK(back[i].observed[k].pos.x == scenes[i].observed[k].pos.x);
            CHECK(back[i].observed[k].t == scenes[i].observed[k].t);
        }
        REQUIRE(back[i].neighbors.size() == scenes[i].neighbors.size());
        CHECK(back[i].neighbors[0].valid == scenes[i].neighbors[0].valid);
        REQUIRE(back[i].image != nullptr);
        back[i].validate();
    }
    // the single shared image is deduplicated
    CHECK(back[0].image.get() == back[1].image.get());
    CHECK(back[0].image->at(3, 4, 1) == Approx(0.5).margin(1e-2));
    CHECK(back[0].image->meters_per_pixel == 0.2);
}
