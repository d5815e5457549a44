#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "voe/dataio.hpp"
#include "voe/rng.hpp"
#include "voe/script_json.hpp"

using namespace voe;
using namespace voe::io;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path p = fs::temp_directory_path() /
                 ("voe_dataio_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
    fs::create_directories(p);
    return p;
}

VideoRecord sample_record(int w = 64, int h = 64, int frames = 15) {
    VideoRecord r;
    r.width = w;
    r.height = h;
    r.n_frames = frames;
    r.frames.resize(static_cast<std::size_t>(w) * h * 3 * frames);
    Rng rng(5);
    for (auto& b : r.frames) b = static_cast<std::uint8_t>(rng.uniform_int(256));
    r.meta.category = "continuity";
    r.meta.role = Role::consistent_probe;
    r.meta.seed = 777;
    r.meta.manipulation_frame = 6;
    r.meta.counterbalance_group = 3;
    r.meta.pair_id = "continuity/test/3";
    r.meta.manipulated_bodies = {4};
    r.meta.occluder_bodies = {2};
    scene::Body b;
    b.id = 4;
    b.shape.kind = scene::ShapeKind::sphere;
    b.shape.radius = 0.25;
    b.pose.position = {0.1, 0.25, -0.3};
    b.dynamic = true;
    r.meta.script.bodies.push_back(b);
    return r;
}

}  // namespace

TEST_CASE("canonical json: sorted keys, 9 significant digits, stable") {
    Json j;
    j["zeta"] = 1;
    j["alpha"] = 0.1234567891234;
    j["mid"] = Json::array({1.0, true, "a\"b"});
    const std::string s = canonical_dump(j);
    CHECK(s == R"({"alpha":0.123456789,"mid":[1,true,"a\"b"],"zeta":1})");
    // snap9 makes values exactly representable at 9 digits.
    const double x = snap9(0.12345678912345);
    CHECK(format_double9(x) == "0.123456789");
    CHECK(snap9(x) == x);
}

TEST_CASE("video container: round trip is bit-identical") {
    const fs::path dir = temp_dir();
    VideoRecord r = sample_record();
    write_video(r, dir / "v.voev");
    VideoRecord back = read_video(dir / "v.voev");
    CHECK(back.width == r.width);
    CHECK(back.height == r.height);
    CHECK(back.n_frames == r.n_frames);
    CHECK(back.frames == r.frames);
    CHECK(back.meta.category == r.meta.category);
    CHECK(back.meta.role == r.meta.role);
    CHECK(back.meta.seed == r.meta.seed);
    CHECK(back.meta.manipulation_frame == r.meta.manipulation_frame);
    CHECK(back.meta.pair_id == r.meta.pair_id);
    CHECK(back.meta.script.bodies.size() == 1);
    CHECK(back.meta.script.bodies[0].shape.radius == 0.25);

    // Re-serializing the sidecar reproduces the same bytes.
    const std::string again = canonical_dump(meta_to_json(back.meta));
    std::ifstream f(dir / "v.json", std::ios::binary);
    std::string orig((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    CHECK(again == orig);
    fs::remove_all(dir);
}

TEST_CASE("video container: 64x64x15 payload is 184320 bytes plus 12 header") {
    const fs::path dir = temp_dir();
    VideoRecord r = sample_record(64, 64, 15);
    write_video(r, dir / "v.voev");
    CHECK(fs::file_size(dir / "v.voev") == 184320u + 12u);
    fs::remove_all(dir);
}

TEST_CASE("video container: corrupted magic and truncation are rejected") {
    const fs::path dir = temp_dir();
    VideoRecord r = sample_record(8, 8, 2);
    write_video(r, dir / "v.voev");

    SUBCASE("magic") {
        std::fstream f(dir / "v.voev", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_AS(read_video(dir / "v.voev"), FormatError);
    }
    SUBCASE("truncated payload") {
        const auto size = fs::file_size(dir / "v.voev");
        fs::resize_file(dir / "v.voev", size - 7);
        CHECK_THROWS_AS(read_video(dir / "v.voev"), FormatError);
    }
    SUBCASE("missing sidecar") {
        fs::remove(dir / "v.json");
        CHECK_THROWS_AS(read_video(dir / "v.voev"), FormatError);
    }
    fs::remove_all(dir);
}

TEST_CASE("sidecar schema: probe without pair id is rejected") {
    VideoRecord r = sample_record(8, 8, 2);
    Json j = meta_to_json(r.meta);
    j.erase("pair_id");
    CHECK_THROWS_AS(meta_from_json(j), FormatError);

    // Non-probe with manipulation_frame fails validation.
    VideoRecord bad = sample_record(8, 8, 2);
    bad.meta.role = Role::control;
    bad.meta.pair_id.clear();
    CHECK_THROWS_AS(bad.validate(), FormatError);
}

TEST_CASE("export_ppm: header and pixel bytes") {
    const fs::path dir = temp_dir();
    VideoRecord r = sample_record(64, 64, 3);
    export_ppm(r, 1, dir / "f.ppm");
    std::ifstream f(dir / "f.ppm", std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
    const std::string header = "P6\n64 64\n255\n";
    REQUIRE(content.substr(0, header.size()) == header);
    const auto frame = r.frame(1);
    REQUIRE(content.size() - header.size() == frame.size());
    CHECK(std::equal(frame.begin(), frame.end(), content.begin() +
                     static_cast<std::ptrdiff_t>(header.size()),
                     [](std::uint8_t a, char b) {
                         return a == static_cast<std::uint8_t>(b);
                     }));
    CHECK_THROWS_AS(export_ppm(r, 3, dir / "g.ppm"), ParameterError);
    fs::remove_all(dir);
}

TEST_CASE("script json: parse of canonical output is an exact round trip") {
    scene::SceneScript s;
    s.n_frames = 15;
    s.dt = snap9(0.2);
    scene::Body b;
    b.id = 1;
    b.shape.kind = scene::ShapeKind::plank;
    b.shape.extents = {snap9(1.3), snap9(0.05), snap9(1.7)};
    b.color = {snap9(0.8), snap9(0.1), snap9(0.2)};
    s.bodies.push_back(b);
    scene::SceneEvent e;
    e.kind = scene::EventKind::kinematic_move;
    e.frame = 2;
    e.body = 1;
    e.path = scene::plank_fall_path({0, 0, snap9(0.2)}, snap9(1.7), snap9(0.05),
                                    snap9(1.45),
                                    scene::PlankEnd{scene::PlankEnd::Kind::rests_on,
                                                    snap9(0.5)},
                                    2, 8);
    e.path.rate = snap9(e.path.rate);
    e.path.angle_end = snap9(e.path.angle_end);
    s.events.push_back(e);

    const std::string once = canonical_dump(script_to_json(s));
    scene::SceneScript back = script_from_json(Json::parse(once));
    const std::string twice = canonical_dump(script_to_json(back));
    CHECK(once == twice);
    // The parsed script simulates identically.
    auto a = scene::simulate(s);
    auto c = scene::simulate(back);
    for (std::size_t f = 0; f < a.size(); ++f)
        CHECK(a[f].bodies[0].body.pose == c[f].bodies[0].body.pose);
}

TEST_CASE("manifest: round trip, content hash, corruption detection") {
    const fs::path dir = temp_dir();
    VideoRecord r = sample_record(8, 8, 2);
    write_video(r, dir / "v.voev");

    Manifest m;
    m.spec_echo = Json{{"n", 1}};
    ManifestEntry e;
    e.video = "v.voev";
    e.meta = "v.json";
    e.video_hash = hash_hex(file_fnv1a64(dir / "v.voev"));
    e.meta_hash = hash_hex(file_fnv1a64(dir / "v.json"));
    e.role = r.meta.role;
    e.pair_id = r.meta.pair_id;
    m.files["continuity"]["test"].push_back(e);
    write_manifest(m, dir);

    Manifest back = read_manifest(dir);
    CHECK(back.content_hash() == m.content_hash());
    verify_manifest(back, dir);

    // Flip one byte in the payload: verification must fail.
    {
        std::fstream f(dir / "v.voev", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(20);
        char c;
        f.seekg(20);
        f.read(&c, 1);
        c = static_cast<char>(c ^ 1);
        f.seekp(20);
        f.write(&c, 1);
    }
    CHECK_THROWS_AS(verify_manifest(back, dir), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("batch iterator: sizes, determinism, permutation per epoch") {
    // 25 videos, batch 10: batches of 10, 10, 5.
    auto batches = BatchIterator::epoch_batches(25, 10, 42, 0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 10);
    CHECK(batches[1].size() == 10);
    CHECK(batches[2].size() == 5);

    // Same seed, same order.
    auto again = BatchIterator::epoch_batches(25, 10, 42, 0);
    CHECK(batches == again);
    // Different epoch or seed, different order (overwhelmingly).
    CHECK(BatchIterator::epoch_batches(25, 10, 42, 1) != batches);
    CHECK(BatchIterator::epoch_batches(25, 10, 43, 0) != batches);

    // Union over one epoch is the full split exactly once.
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& b : batches)
        for (std::size_t i : b) {
            seen.insert(i);
            ++total;
        }
    CHECK(total == 25);
    CHECK(seen.size() == 25);

    // Stateful iterator crosses epochs.
    BatchIterator it(4, 3, 7);
    CHECK(it.next().size() == 3);
    CHECK(it.next().size() == 1);
    CHECK(it.epoch() == 0);
    CHECK(it.next().size() == 3);
    CHECK(it.epoch() == 1);

    // Empty split gives an empty stream.
    BatchIterator empty(0, 4, 1);
    CHECK(empty.next().empty());
}
