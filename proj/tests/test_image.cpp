#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>

#include "trajpred/image.hpp"
#include "trajpred/rng.hpp"

using namespace trajpred;

namespace {

/// Image whose pixel values encode their own coordinates, for exact
/// sampling checks.
BevImage unique_image(std::size_t h, std::size_t w) {
    BevImage img(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            img.at(r, c, 0) = static_cast<float>(r) / static_cast<float>(h);
            img.at(r, c, 1) = static_cast<float>(c) / static_cast<float>(w);
            img.at(r, c, 2) = static_cast<float>(r * w + c) / static_cast<float>(h * w);
        }
    }
    return img;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("crop anchor pins the agent pixel with identity heading") {
    auto img = unique_image(32, 32);
    // walk along +x ending at pixel (col 10, row 10)
    const std::vector<Vec2> obs = {{9, 10}, {10, 10}};
    auto t = heading_transform(obs);
    auto crop = rotate_crop(img, t, 8, CropSampling::nearest);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        CHECK(crop.at(4, 2, ch) == img.at(10, 10, ch));
    }
}

TEST_CASE("all-zero source crops to all zeros") {
    BevImage img(16, 16);
    const std::vector<Vec2> obs = {{7, 8}, {8, 8}};
    auto crop = rotate_crop(img, heading_transform(obs), 8);
    for (float v : crop.pixels) CHECK(v == 0.0f);
}

TEST_CASE("crop anchor matches under a rotated heading") {
    auto img = unique_image(64, 64);
    // heading +y (90 degrees in pixel space), agent at (20, 30)
    const std::vector<Vec2> obs = {{20, 29}, {20, 30}};
    auto t = heading_transform(obs);
    auto crop = rotate_crop(img, t, 16, CropSampling::nearest);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        CHECK(crop.at(8, 4, ch) == img.at(30, 20, ch));
    }
}

TEST_CASE("every crop pixel equals the inverse-mapped source sample") {
    Rng rng(55);
    auto img = unique_image(48, 48);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Vec2> obs;
        Vec2 p{rng.uniform(12, 36), rng.uniform(12, 36)};
        const double theta = rng.uniform(0, 2 * M_PI);
        obs.push_back(p - Vec2{std::cos(theta), std::sin(theta)});
        obs.push_back(p);
        auto t = heading_transform(obs);
        const std::size_t s = 8;
        auto crop = rotate_crop(img, t, s, CropSampling::nearest);

        auto inv = t.inverse();
        for (std::size_t r = 0; r < s; ++r) {
            for (std::size_t c = 0; c < s; ++c) {
                const Vec2 agent{(static_cast<double>(c) - 2.0), (static_cast<double>(r) - 4.0)};
                const Vec2 world = inv.apply(agent);
                const long ci = std::lround(world.x);
                const long ri = std::lround(world.y);
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const float expect =
                        (ri >= 0 && ci >= 0 && ri < 48 && ci < 48)
                            ? img.at(static_cast<std::size_t>(ri), static_cast<std::size_t>(ci), ch)
                            : 0.0f;
                    REQUIRE(crop.at(r, c, ch) == expect);
                }
            }
        }
    }
}

TEST_CASE("crop rejects bad sides and far-away agents") {
    auto img = unique_image(16, 16);
    const std::vector<Vec2> obs = {{7, 8}, {8, 8}};
    CHECK_THROWS_AS(rotate_crop(img, heading_transform(obs), 1), ConfigError);

    const std::vector<Vec2> far = {{499, 500}, {500, 500}};
    CHECK_THROWS_AS(rotate_crop(img, heading_transform(far), 8), CropError);
}

TEST_CASE("bilinear sampling interpolates between pixels") {
    BevImage img(4, 4);
    img.at(1, 1, 0) = 1.0f;
    img.at(1, 2, 0) = 0.0f;
    // agent halfway between columns 1 and 2 on row 1, identity heading
    const std::vector<Vec2> obs = {{0.5, 1.0}, {1.5, 1.0}};
    auto crop = rotate_crop(img, heading_transform(obs), 2, CropSampling::bilinear);
    CHECK(crop.at(1, 0, 0) == Approx(0.5));
}

TEST_CASE("patchify produces (s/patch)^2 tokens") {
    ParamRegistry<double> reg;
    auto& w = reg.add("proj.w", {12, 5});
    auto& b = reg.add("proj.b", {5});
    BevImage img(4, 4);
    Graph<double> g;
    auto tokens = patchify(g, img, 2, w, b);
    CHECK(tokens.tokens.rows() == 4);
    CHECK(tokens.tokens.cols() == 5);
}

TEST_CASE("patchify of a zero image with zero bias is zero") {
    ParamRegistry<double> reg;
    auto& w = reg.add("proj.w", {12, 6});
    auto& b = reg.add("proj.b", {6});
    w.tensor.fill(0.7);
    BevImage img(4, 4);
    Graph<double> g;
    auto tokens = patchify(g, img, 2, w, b);
    for (std::size_t i = 0; i < tokens.tokens.value().size(); ++i) {
        CHECK(tokens.tokens.value()[i] == 0.0);
    }
}

TEST_CASE("token 0 is the top-left patch flattened channel-last") {
    ParamRegistry<double> reg;
    auto& w = reg.add("proj.w", {12, 12});
    auto& b = reg.add("proj.b", {12});
    for (std::size_t i = 0; i < 12; ++i) w.tensor.at(i, i) = 1.0; // identity readout

    BevImage img(4, 4);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                img.at(r, c, ch) = static_cast<float>((r * 4 + c) * 3 + ch) / 64.0f;
            }
        }
    }
    Graph<double> g;
    auto tokens = patchify(g, img, 2, w, b);
    // top-left 2x2 patch, row-major, channel-last
    const std::size_t expect_px[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
            CHECK(tokens.tokens.value().at(0, k * 3 + ch) ==
                  Approx(img.at(expect_px[k][0], expect_px[k][1], ch)));
        }
    }
}

TEST_CASE("patchify rejects indivisible sides") {
    ParamRegistry<double> reg;
    auto& w = reg.add("proj.w", {27, 4});
    auto& b = reg.add("proj.b", {4});
    BevImage img(5, 5);
    Graph<double> g;
    CHECK_THROWS_AS(patchify(g, img, 3, w, b), ConfigError);
    CHECK_THROWS_AS(patch_matrix<double>(img, 0), ConfigError);
}

TEST_CASE("raw image round-trip preserves bytes and metadata") {
    auto img = unique_image(6, 9);
    img.meters_per_pixel = 0.25;
    img.origin = {-3.5, 2.5};
    const std::string path = temp_path("trajpred_test_img.raw");
    write_raw_image(path, img);
    auto back = read_raw_image(path);
    CHECK(back.height == 6);
    CHECK(back.width == 9);
    CHECK(back.meters_per_pixel == 0.25);
    CHECK(back.origin.x == -3.5);
    CHECK(back.origin.y == 2.5);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const float quantized =
            static_cast<float>(static_cast<int>(img.pixels[i] * 255.0f + 0.5f)) / 255.0f;
        CHECK(back.pixels[i] == Approx(quantized).margin(1e-6));
    }
    std::remove(path.c_str());
}

TEST_CASE("png round-trip preserves quantized pixels") {
    auto img = unique_image(5, 7);
    const std::string path = temp_path("trajpred_test_img.png");
    write_png(path, img);
    auto back = read_png(path);
    CHECK(back.height == 5);
    CHECK(back.width == 7);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const float quantized =
            static_cast<float>(static_cast<int>(img.pixels[i] * 255.0f + 0.5f)) / 255.0f;
        CHECK(back.pixels[i] == Approx(quantized).margin(1e-6));
    }
    std::remove(path.c_str());
}
