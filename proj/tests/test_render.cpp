#include <cmath>

#include "doctest.h"
#include "voe/render.hpp"

using namespace voe;
using namespace voe::render;
using scene::Body;
using scene::BodyShape;
using scene::FloorSpec;
using scene::ShapeKind;
using scene::Vec3;
using scene::WorldState;

namespace {

Camera test_camera() {
    Camera c;
    c.eye = {0, 1.2, 4.0};
    c.look_at = {0, 0.5, 0};
    c.vfov = 0.9;
    return c;
}

WorldState single_box_state(Vec3 pos, Vec3 extents, Vec3 color, int id = 1) {
    Body b;
    b.id = id;
    b.shape = BodyShape{ShapeKind::box, extents, 0.0, 0.0};
    b.pose.position = pos;
    b.color = color;
    WorldState st;
    st.bodies.push_back(scene::BodyState{b});
    return st;
}

}  // namespace

TEST_CASE("project: look-at point lands at the image centre") {
    Camera c = test_camera();
    auto p = project(c.look_at, c, 64, 64);
    REQUIRE(p.has_value());
    CHECK(std::fabs(p->px - 32.0) <= 0.5);
    CHECK(std::fabs(p->py - 32.0) <= 0.5);
}

TEST_CASE("project: doubling distance on the optical axis doubles depth only") {
    Camera c;
    c.eye = {0, 1, 5};
    c.look_at = {0, 1, 0};
    auto p1 = project({0, 1, 2}, c, 64, 64);   // 3 units out
    auto p2 = project({0, 1, -1}, c, 64, 64);  // 6 units out
    REQUIRE(p1.has_value());
    REQUIRE(p2.has_value());
    CHECK(p1->px == doctest::Approx(p2->px).epsilon(1e-9));
    CHECK(p1->py == doctest::Approx(p2->py).epsilon(1e-9));
    CHECK(p2->depth == doctest::Approx(2.0 * p1->depth).epsilon(1e-9));
}

TEST_CASE("project: known frustum corner maps to the image corner") {
    Camera c;
    c.eye = {0, 0, 5};
    c.look_at = {0, 0, 0};
    c.vfov = 0.9;
    const double d = 3.0;
    const double half_h = d * std::tan(0.45);
    // aspect is 1 at 64x64, so the top-right frustum corner at depth d:
    auto p = project({half_h, half_h, 5 - d}, c, 64, 64);
    REQUIRE(p.has_value());
    CHECK(p->px == doctest::Approx(64.0).epsilon(1e-9));
    CHECK(p->py == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("project: points behind the near plane are clipped") {
    Camera c = test_camera();
    CHECK_FALSE(project({0, 1.2, 9.0}, c, 64, 64).has_value());
}

TEST_CASE("rasterize: scene with nothing above the floor") {
    // Camera pitched up so neither floor nor bodies are in view:
    // every pixel is the background colour.
    Camera c;
    c.eye = {0, 1.0, 4.0};
    c.look_at = {0, 8.0, 8.0};
    WorldState empty;
    FloorSpec floor;
    Frame f = rasterize(empty, c, 32, 32, floor);
    REQUIRE(f.rgb.size() == 32u * 32u * 3u);
    for (std::size_t i = 3; i < f.rgb.size(); i += 3) {
        CHECK(f.rgb[i] == f.rgb[0]);
        CHECK(f.rgb[i + 1] == f.rgb[1]);
        CHECK(f.rgb[i + 2] == f.rgb[2]);
    }
}

TEST_CASE("rasterize: nearer box wins at overlap pixels") {
    WorldState st = single_box_state({0, 0.5, 0}, {0.8, 0.8, 0.1}, {1, 0, 0}, 1);
    Body b2;
    b2.id = 2;
    b2.shape = BodyShape{ShapeKind::box, {0.8, 0.8, 0.1}, 0.0, 0.0};
    b2.pose.position = {0.25, 0.5, -1.0};  // farther away
    b2.color = {0, 1, 0};
    st.bodies.push_back(scene::BodyState{b2});

    Camera c = test_camera();
    FloorSpec floor;
    SceneBuffers buf = render_scene(st, c, 64, 64, floor, true);
    // Centre pixel: both boxes project there, the near one owns it.
    const std::size_t centre = (32u * 64u + 32u);
    CHECK(buf.body_id[centre] == 1);
    CHECK(buf.frame.rgb[centre * 3] > buf.frame.rgb[centre * 3 + 1]);  // red wins
}

TEST_CASE("rasterize: face-on cube silhouette matches the analytic pixel count") {
    // Cube face-on to an axis-aligned camera: the silhouette is exactly
    // the projected front face, a square we can count pixel centres in.
    Camera c;
    c.eye = {0, 0.5, 4.0};
    c.look_at = {0, 0.5, 0};
    c.vfov = 0.9;
    const double edge = 1.0;
    WorldState st = single_box_state({0, 0.5, 0}, {edge, edge, edge}, {1, 0, 0});
    FloorSpec floor;
    SceneBuffers buf = render_scene(st, c, 64, 64, floor, true);

    int painted = 0;
    for (int id : buf.body_id) painted += (id == 1);

    // Analytic: project the front-face square corners, count centres.
    auto lo = project({-0.5, 0.0, 0.5}, c, 64, 64);
    auto hi = project({0.5, 1.0, 0.5}, c, 64, 64);
    REQUIRE(lo.has_value());
    REQUIRE(hi.has_value());
    int expected = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const double cx = x + 0.5, cy = y + 0.5;
            if (cx >= lo->px && cx <= hi->px && cy >= hi->py && cy <= lo->py)
                ++expected;
        }
    CHECK(std::fabs(painted - expected) <= 0.02 * expected);
}

TEST_CASE("visibility_buffer: single body silhouette and full occlusion") {
    WorldState st = single_box_state({0, 0.5, 0}, {0.6, 0.6, 0.6}, {1, 0, 0}, 7);
    Camera c = test_camera();
    auto ids = visibility_buffer(st, c, 64, 64);
    int n7 = 0;
    for (int id : ids) n7 += (id == 7);
    CHECK(n7 > 0);

    // Fully occluded target appears at zero pixels.
    Body wall;
    wall.id = 3;
    wall.shape = BodyShape{ShapeKind::box, {3.0, 3.0, 0.1}, 0.0, 0.0};
    wall.pose.position = {0, 1.0, 1.5};
    wall.color = {0, 0, 1};
    st.bodies.push_back(scene::BodyState{wall});
    ids = visibility_buffer(st, c, 64, 64);
    n7 = 0;
    for (int id : ids) n7 += (id == 7);
    CHECK(n7 == 0);
}

TEST_CASE("rasterize and visibility agree pixelwise") {
    WorldState st = single_box_state({-0.3, 0.4, 0}, {0.5, 0.8, 0.5}, {0.9, 0.4, 0.1}, 1);
    Body b2;
    b2.id = 2;
    b2.shape = BodyShape{ShapeKind::sphere, {}, 0.35, 0.0};
    b2.pose.position = {0.5, 0.35, 0.2};
    b2.color = {0.1, 0.5, 0.9};
    st.bodies.push_back(scene::BodyState{b2});

    Camera c = test_camera();
    FloorSpec floor;
    floor.pattern = 1;
    SceneBuffers buf = render_scene(st, c, 64, 64, floor, true);
    auto ids = visibility_buffer(st, c, 64, 64);
    CHECK(buf.body_id == ids);

    // Where the buffer names a body, the frame must show that body's
    // shaded colour: verify by re-rendering with the other body hidden.
    WorldState only1 = st;
    only1.bodies[1].visible = false;
    SceneBuffers ref = render_scene(only1, c, 64, 64, floor, true);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] != 1) continue;
        CHECK(buf.frame.rgb[i * 3 + 0] == ref.frame.rgb[i * 3 + 0]);
        CHECK(buf.frame.rgb[i * 3 + 1] == ref.frame.rgb[i * 3 + 1]);
        CHECK(buf.frame.rgb[i * 3 + 2] == ref.frame.rgb[i * 3 + 2]);
    }
}

TEST_CASE("rasterize: identical input gives bit-identical frames") {
    WorldState st = single_box_state({0, 0.5, 0}, {0.7, 0.7, 0.7}, {0.3, 0.6, 0.9});
    Camera c = test_camera();
    FloorSpec floor;
    floor.pattern = 5;
    Frame f1 = rasterize(st, c, 48, 48, floor);
    Frame f2 = rasterize(st, c, 48, 48, floor);
    CHECK(f1.rgb == f2.rgb);
}

TEST_CASE("rasterize: silhouette area scales with resolution squared within 5%") {
    WorldState st = single_box_state({0, 0.5, 0}, {0.7, 0.7, 0.7}, {1, 0, 0});
    Body sph;
    sph.id = 2;
    sph.shape = BodyShape{ShapeKind::sphere, {}, 0.3, 0.0};
    sph.pose.position = {0.9, 0.3, 0};
    sph.color = {0, 1, 0};
    st.bodies.push_back(scene::BodyState{sph});
    Camera c = test_camera();
    for (int id : {1, 2}) {
        auto count = [&](int res) {
            auto ids = visibility_buffer(st, c, res, res);
            int n = 0;
            for (int i : ids) n += (i == id);
            return n;
        };
        const int c64 = count(64);
        const int c128 = count(128);
        CHECK(std::fabs(c128 - 4.0 * c64) <= 0.05 * 4.0 * c64);
    }
}

TEST_CASE("floor patterns are deterministic functions of position") {
    FloorSpec f;
    f.pattern = 1;
    f.color_a = {1, 1, 1};
    f.color_b = {0, 0, 0};
    CHECK(floor_color(f, 0.5, 0.5) == Vec3{1, 1, 1});
    CHECK(floor_color(f, 1.5, 0.5) == Vec3{0, 0, 0});
    CHECK(floor_color(f, 1.5, 1.5) == Vec3{1, 1, 1});
    f.pattern = 0;
    CHECK(floor_color(f, -3.7, 9.2) == Vec3{1, 1, 1});
    f.pattern = 99;
    CHECK_THROWS_AS(floor_color(f, 0, 0), ParameterError);
}
