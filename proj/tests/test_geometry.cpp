#include <catch2/catch.hpp>

#include <cmath>

#include "trajpred/geometry.hpp"
#include "trajpred/rng.hpp"

using namespace trajpred;

TEST_CASE("heading transform along +x is a pure translation") {
    const std::vector<Vec2> pts = {{0, 0}, {1, 0}};
    auto t = heading_transform(pts);
    CHECK(t.rotation()[0] == Approx(1.0));
    CHECK(t.rotation()[1] == Approx(0.0).margin(1e-15));
    CHECK(t.translation().x == Approx(-1.0));
    CHECK(t.translation().y == Approx(0.0).margin(1e-15));
    const Vec2 last = t.apply(pts[1]);
    CHECK(last.x == Approx(0.0).margin(1e-15));
    CHECK(last.y == Approx(0.0).margin(1e-15));
}

TEST_CASE("heading transform rotates +y motion onto +x") {
    const std::vector<Vec2> pts = {{0, 0}, {0, 1}};
    auto t = heading_transform(pts);
    const Vec2 prev = t.apply(pts[0]);
    CHECK(prev.x == Approx(-1.0));
    CHECK(prev.y == Approx(0.0).margin(1e-12));
}

TEST_CASE("heading transform needs two points") {
    const std::vector<Vec2> one = {{1, 2}};
    CHECK_THROWS_AS(heading_transform(one), ContractError);
}

TEST_CASE("normalization pins last point and heading, and round-trips") {
    Rng rng(101);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<Vec2> pts;
        Vec2 p{rng.uniform(-50, 50), rng.uniform(-50, 50)};
        double theta = rng.uniform(0, 2 * M_PI);
        for (int i = 0; i < 8; ++i) {
            pts.push_back(p);
            theta += rng.uniform(-0.4, 0.4);
            const double step = rng.uniform(0.1, 0.8);
            p = p + Vec2{std::cos(theta) * step, std::sin(theta) * step};
        }
        auto t = heading_transform(pts);
        CHECK(t.is_orthonormal(1e-9));
        auto norm = apply_transform(t, pts);
        CHECK(norm.back().norm() < 1e-9);
        CHECK(std::abs(norm[norm.size() - 2].y) < 1e-9);
        CHECK(norm[norm.size() - 2].x <= 1e-9);

        auto inv = t.inverse();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(distance(inv.apply(norm[i]), pts[i]) < 1e-9);
        }
    }
}

TEST_CASE("apply_transform identity and simple motions") {
    const std::vector<Vec2> pts = {{1, 2}};
    auto same = apply_transform(RigidTransform2D::identity(), pts);
    CHECK(same[0].x == 1.0);
    CHECK(same[0].y == 2.0);

    RigidTransform2D shift({1, 0, 0, 1}, {-1, -2});
    auto zero = apply_transform(shift, pts);
    CHECK(zero[0].norm() == Approx(0.0).margin(1e-15));

    auto quarter = RigidTransform2D::rotation_angle(M_PI / 2);
    const Vec2 r = quarter.apply({1, 0});
    CHECK(std::abs(r.x) < 1e-12);
    CHECK(std::abs(r.y - 1.0) < 1e-12);
}

TEST_CASE("degenerate heading falls back to the last nonzero displacement") {
    // moving +y, then standing still for the last two samples
    const std::vector<Vec2> pts = {{0, 0}, {0, 1}, {0, 2}, {0, 2}};
    auto t = heading_transform(pts);
    // heading should still be +y, so the first point maps onto the -x axis
    const Vec2 first = t.apply(pts[0]);
    CHECK(first.x == Approx(-2.0));
    CHECK(std::abs(first.y) < 1e-12);
}

TEST_CASE("fully static window keeps the identity rotation") {
    const std::vector<Vec2> pts = {{3, 4}, {3, 4}, {3, 4}};
    auto t = heading_transform(pts);
    CHECK(t.rotation()[0] == 1.0);
    CHECK(t.rotation()[1] == 0.0);
    const Vec2 last = t.apply(pts.back());
    CHECK(last.norm() == Approx(0.0).margin(1e-15));
}

TEST_CASE("compose with inverse yields the identity") {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        auto t = RigidTransform2D::rotation_angle(rng.uniform(0, 2 * M_PI),
                                                  {rng.uniform(-5, 5), rng.uniform(-5, 5)});
        auto id = t.compose(t.inverse());
        CHECK(std::abs(id.rotation()[0] - 1.0) < 1e-12);
        CHECK(std::abs(id.rotation()[1]) < 1e-12);
        CHECK(id.translation().norm() < 1e-12);
    }
}
