#include "voe/probegen.hpp"

#include <algorithm>
#include <cmath>

#include "voe/occlusion.hpp"
#include "voe/render.hpp"
#include "voe/rng.hpp"

namespace voe::gen {

using io::snap9;
using io::VideoMeta;
using io::VideoRecord;
using scene::Axis;
using scene::Body;
using scene::BodyShape;
using scene::CameraSpec;
using scene::EventKind;
using scene::KinematicPath;
using scene::SceneEvent;
using scene::SceneScript;
using scene::ShapeKind;
using scene::Vec3;
using scene::WorldState;

const Category kAllCategories[kCategoryCount] = {
    Category::object_persistence, Category::unchangeableness,
    Category::continuity, Category::solidity, Category::containment};

std::string category_name(Category c) {
    switch (c) {
        case Category::object_persistence: return "object_persistence";
        case Category::unchangeableness: return "unchangeableness";
        case Category::continuity: return "continuity";
        case Category::solidity: return "solidity";
        case Category::containment: return "containment";
    }
    return "object_persistence";
}

Category category_from_name(const std::string& s) {
    for (Category c : kAllCategories)
        if (category_name(c) == s) return c;
    throw ConfigError("unknown category: " + s);
}

std::string attribute_name(UnchangeAttribute a) {
    switch (a) {
        case UnchangeAttribute::mixed: return "mixed";
        case UnchangeAttribute::position: return "position";
        case UnchangeAttribute::color: return "color";
        case UnchangeAttribute::shape: return "shape";
    }
    return "mixed";
}

UnchangeAttribute attribute_from_name(const std::string& s) {
    for (UnchangeAttribute a : {UnchangeAttribute::mixed, UnchangeAttribute::position,
                                UnchangeAttribute::color, UnchangeAttribute::shape})
        if (attribute_name(a) == s) return a;
    throw ConfigError("unknown unchangeableness attribute: " + s);
}

double Range::sample(Rng& rng) const { return snap9(rng.uniform(lo, hi)); }

Range Range::widened(double frac, double floor_lo) const {
    const double span = hi - lo;
    return Range{std::max(floor_lo, lo - frac * span), hi + frac * span};
}

void CategoryConfig::validate() const {
    auto check = [](const Range& r, const char* name) {
        if (!(r.lo < r.hi))
            throw ConfigError(std::string("CategoryConfig: empty range ") + name);
    };
    check(plank_length, "plank_length");
    check(plank_width, "plank_width");
    check(plank_start_angle, "plank_start_angle");
    check(op_object_size, "op_object_size");
    check(uc_object_size, "uc_object_size");
    check(screen_width, "screen_width");
    check(screen_height, "screen_height");
    check(pillar_gap, "pillar_gap");
    check(pillar_width, "pillar_width");
    check(pillar_height, "pillar_height");
    check(ball_radius, "ball_radius");
    check(so_container_width, "so_container_width");
    check(so_container_height, "so_container_height");
    check(so_protrusion, "so_protrusion");
    check(co_container_width, "co_container_width");
    check(co_container_height, "co_container_height");
    check(co_cube_size, "co_cube_size");
    check(co_move_distance, "co_move_distance");
    if (extra_objects < 0 || extra_objects > 2)
        throw ConfigError("CategoryConfig: extra_objects must be 0..2");
    if (timing_jitter < 0)
        throw ConfigError("CategoryConfig: timing_jitter must be >= 0");
}

namespace {

constexpr int kMaxAttempts = 100;
constexpr double kOcclusionGate = 0.995;  // generator margin over the 0.99 invariant

const Vec3 kPalette[8] = {
    {0.85, 0.15, 0.15}, {0.15, 0.70, 0.20}, {0.20, 0.35, 0.85},
    {0.90, 0.85, 0.15}, {0.85, 0.20, 0.80}, {0.15, 0.80, 0.80},
    {0.90, 0.50, 0.10}, {0.50, 0.20, 0.70}};

const Vec3 kFloorPalette[4] = {
    {0.55, 0.52, 0.48}, {0.42, 0.44, 0.47}, {0.63, 0.60, 0.55}, {0.34, 0.37, 0.41}};

Vec3 sample_palette(Rng& rng) {
    return kPalette[rng.uniform_int(8)];
}

Vec3 sample_palette_except(Rng& rng, const Vec3& avoid) {
    for (;;) {
        const Vec3 c = sample_palette(rng);
        if (!(c == avoid)) return c;
    }
}

void sample_floor(Rng& rng, scene::FloorSpec& floor) {
    floor.pattern = static_cast<int>(rng.uniform_int(render::kFloorPatternCount));
    const int a = static_cast<int>(rng.uniform_int(4));
    int b = static_cast<int>(rng.uniform_int(3));
    if (b >= a) ++b;
    floor.color_a = kFloorPalette[a];
    floor.color_b = kFloorPalette[b];
}

Vec3 snap_vec(const Vec3& v) { return {snap9(v.x), snap9(v.y), snap9(v.z)}; }

void snap_shape(BodyShape& s) {
    s.extents = snap_vec(s.extents);
    s.radius = snap9(s.radius);
    s.wall = snap9(s.wall);
}

void snap_path(KinematicPath& p) {
    p.from = snap_vec(p.from);
    p.to = snap_vec(p.to);
    p.fixed_angle = snap9(p.fixed_angle);
    p.hinge_point = snap_vec(p.hinge_point);
    p.angle_start = snap9(p.angle_start);
    p.rate = snap9(p.rate);
    p.angle_end = snap9(p.angle_end);
    p.length = snap9(p.length);
    p.thickness = snap9(p.thickness);
}

// Everything stored in a script is snapped to 9 significant digits so the
// canonical sidecar re-simulates to the identical video.
void snap_script(SceneScript& s) {
    s.dt = snap9(s.dt);
    s.camera.eye = snap_vec(s.camera.eye);
    s.camera.look_at = snap_vec(s.camera.look_at);
    s.camera.vfov = snap9(s.camera.vfov);
    s.floor.color_a = snap_vec(s.floor.color_a);
    s.floor.color_b = snap_vec(s.floor.color_b);
    for (Body* b : [&] {
             std::vector<Body*> all;
             for (auto& body : s.bodies) all.push_back(&body);
             for (auto& e : s.events)
                 if (e.kind == EventKind::appear) all.push_back(&e.appear_body);
             return all;
         }()) {
        b->pose.position = snap_vec(b->pose.position);
        b->pose.angle = snap9(b->pose.angle);
        b->velocity = snap_vec(b->velocity);
        b->angular_velocity = snap9(b->angular_velocity);
        b->color = snap_vec(b->color);
        snap_shape(b->shape);
    }
    for (auto& e : s.events) {
        e.new_pose.position = snap_vec(e.new_pose.position);
        e.new_pose.angle = snap9(e.new_pose.angle);
        e.rgb = snap_vec(e.rgb);
        snap_shape(e.new_shape);
        snap_path(e.path);
    }
}

void sort_events(SceneScript& s) {
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const SceneEvent& a, const SceneEvent& b) {
                         return a.frame < b.frame;
                     });
}

Body make_box_body(int id, ShapeKind kind, Vec3 extents, Vec3 pos, Vec3 color,
                   bool dynamic = false) {
    Body b;
    b.id = id;
    b.shape.kind = kind;
    b.shape.extents = extents;
    b.pose.position = pos;
    b.color = color;
    b.dynamic = dynamic;
    return b;
}

Body make_sphere_body(int id, double radius, Vec3 pos, Vec3 color,
                      bool dynamic = false) {
    Body b;
    b.id = id;
    b.shape.kind = ShapeKind::sphere;
    b.shape.radius = radius;
    b.pose.position = pos;
    b.color = color;
    b.dynamic = dynamic;
    return b;
}

SceneEvent kin_event(int frame, int body, KinematicPath path) {
    SceneEvent e;
    e.kind = EventKind::kinematic_move;
    e.frame = frame;
    e.body = body;
    e.path = std::move(path);
    return e;
}

KinematicPath linear_path(Vec3 from, Vec3 to, int f0, int f1) {
    KinematicPath p;
    p.kind = KinematicPath::Kind::linear;
    p.start_frame = f0;
    p.end_frame = f1;
    p.from = from;
    p.to = to;
    return p;
}

// Smallest spawn height (0.05 grid) at which the box is entirely above
// the view frustum, plus clearance for the first integration step.
double spawn_y_above_frustum(const CameraSpec& cam_spec, int w, int h,
                             double x, double z, const Vec3& extents,
                             double clearance) {
    const render::Camera cam = render::make_camera(cam_spec);
    for (double y = 1.0; y < 20.0; y += 0.05) {
        bool all_off = true;
        for (int sx : {-1, 1})
            for (int sy : {-1, 1})
                for (int sz : {-1, 1}) {
                    const Vec3 corner{x + sx * extents.x / 2.0,
                                      y + sy * extents.y / 2.0,
                                      z + sz * extents.z / 2.0};
                    auto p = render::project(corner, cam, w, h);
                    if (p && p->py >= -1.0) all_off = false;
                }
        if (all_off) return snap9(y + clearance);
    }
    throw GenerationError("spawn_y_above_frustum: no off-frame height found");
}

VideoMeta base_meta(Category c, io::Role role, std::uint64_t seed,
                    const SceneScript& script) {
    VideoMeta m;
    m.category = category_name(c);
    m.role = role;
    m.seed = seed;
    m.script = script;
    return m;
}

struct PairScripts {
    SceneScript consistent;
    SceneScript inconsistent;
    int manipulation_frame = -1;
    std::vector<int> manipulated;
    std::vector<int> occluders;
};

// Renders both members and enforces the pair-prefix invariant.
ProbePair finalize_pair(Category c, const PairScripts& ps, std::uint64_t seed,
                        int group, const std::string& pair_id, int w, int h) {
    ProbePair pair;
    pair.manipulation_frame = ps.manipulation_frame;
    pair.counterbalance_group = group;

    pair.consistent = render_script(ps.consistent, w, h);
    pair.inconsistent = render_script(ps.inconsistent, w, h);

    const std::size_t fb = pair.consistent.frame_bytes();
    for (int f = 0; f < ps.manipulation_frame; ++f) {
        const auto a = pair.consistent.frame(f);
        const auto b = pair.inconsistent.frame(f);
        if (!std::equal(a.begin(), a.end(), b.begin()))
            throw GenerationError("pair prefix mismatch at frame " +
                                  std::to_string(f) + " (seed " +
                                  std::to_string(seed) + ")");
    }
    (void)fb;

    for (VideoRecord* r : {&pair.consistent, &pair.inconsistent}) {
        const bool inc = (r == &pair.inconsistent);
        r->meta = base_meta(c, inc ? io::Role::inconsistent_probe
                                   : io::Role::consistent_probe,
                            seed, inc ? ps.inconsistent : ps.consistent);
        r->meta.manipulation_frame = ps.manipulation_frame;
        r->meta.counterbalance_group = group;
        r->meta.pair_id = pair_id;
        r->meta.manipulated_bodies = ps.manipulated;
        r->meta.occluder_bodies = ps.occluders;
        r->validate();
    }
    return pair;
}

int pick_jittered(const std::vector<int>& window, Rng& rng, int jitter) {
    const int j = jitter > 0 ? static_cast<int>(rng.uniform_int(
                                   static_cast<std::uint64_t>(jitter) + 1))
                             : 0;
    return window[std::min<std::size_t>(static_cast<std::size_t>(j),
                                        window.size() - 1)];
}

}  // namespace

VideoRecord render_script(const SceneScript& script, int width, int height) {
    const auto states = scene::simulate(script);
    const render::Camera cam = render::make_camera(script.camera);
    VideoRecord r;
    r.width = width;
    r.height = height;
    r.n_frames = script.n_frames;
    r.frames.reserve(r.frame_bytes() * static_cast<std::size_t>(script.n_frames));
    for (const auto& st : states) {
        const render::Frame f =
            render::rasterize(st, cam, width, height, script.floor);
        r.frames.insert(r.frames.end(), f.rgb.begin(), f.rgb.end());
    }
    return r;
}

// ===================================================== object persistence

namespace {

constexpr int kOpPlank = 1;
constexpr int kOpObject = 2;

const CameraSpec kOpCamera{{0, 3.9, 2.3}, {0, 0.0, -0.7}, 1.0};

struct OpScene {
    SceneScript base;       // floor/camera, plank body, no object
    Body object;
    KinematicPath path_rest;
    KinematicPath path_flat;
    int fall_start = 1;
    int divergence_frame = 0;  // first frame the two plank poses differ
};

OpScene sample_op_scene(const GenParams& params, Rng& rng, bool widen,
                        ParamLog* log) {
    const CategoryConfig& cfg = params.config;
    auto range = [&](const Range& r) { return widen ? r.widened(cfg.train_widen) : r; };

    OpScene sc;
    sc.base.n_frames = params.n_frames;
    sc.base.camera = kOpCamera;
    sample_floor(rng, sc.base.floor);

    const double plank_w = range(cfg.plank_width).sample(rng);
    const double plank_len = range(cfg.plank_length).sample(rng);
    const double theta0 = range(cfg.plank_start_angle).sample(rng);
    const double thickness = 0.05;
    // Propping angle stays shallow enough that asin is well-defined and
    // the prop is visually distinct from flat.
    double hmax = std::min(range(cfg.op_object_size).hi, 0.55 * plank_len);
    Range hr{range(cfg.op_object_size).lo, hmax};
    if (!(hr.lo < hr.hi)) hr = Range{0.3 * plank_len, 0.55 * plank_len};
    const double obj_h = hr.sample(rng);

    const double hinge_z = snap9(rng.uniform(0.1, 0.3));
    const int fall_frames = rng.uniform_int(6, 8);
    sc.fall_start = rng.uniform_int(1, 3);

    sc.path_rest = scene::plank_fall_path(
        {0, 0, hinge_z}, plank_len, thickness, theta0,
        scene::PlankEnd{scene::PlankEnd::Kind::rests_on, obj_h}, sc.fall_start,
        fall_frames);
    sc.path_flat = scene::plank_fall_path(
        {0, 0, hinge_z}, plank_len, thickness, theta0,
        scene::PlankEnd{scene::PlankEnd::Kind::flat_on_floor, 0.0}, sc.fall_start,
        fall_frames);
    snap_path(sc.path_rest);
    snap_path(sc.path_flat);

    // First frame where the rest path has clamped but the flat one has not.
    int div = sc.fall_start + 1;
    while (sc.path_rest.hinge_angle_at(div) == sc.path_flat.hinge_angle_at(div) &&
           div < params.n_frames)
        ++div;
    sc.divergence_frame = div;

    const Vec3 plank_color = sample_palette(rng);
    Body plank = make_box_body(kOpPlank, ShapeKind::plank,
                               {plank_w, thickness, plank_len}, {}, plank_color);
    plank.pose = sc.path_rest.pose_at(0);
    sc.base.bodies.push_back(plank);

    // Object placed where the falling plank's tip lands.
    const double theta_e = sc.path_rest.angle_end;
    const double obj_x =
        snap9(rng.uniform(-1.0, 1.0) * std::max(0.0, plank_w / 2 - obj_h / 2 - 0.1));
    const double obj_z = snap9(hinge_z - plank_len * std::cos(theta_e));
    const bool is_cube = rng.coin();
    const Vec3 obj_color = sample_palette_except(rng, plank_color);
    if (is_cube)
        sc.object = make_box_body(kOpObject, ShapeKind::box, {obj_h, obj_h, obj_h},
                                  {obj_x, obj_h / 2, obj_z}, obj_color);
    else
        sc.object = make_sphere_body(kOpObject, obj_h / 2,
                                     {obj_x, obj_h / 2, obj_z}, obj_color);

    if (log) {
        (*log)["plank_length"] = plank_len;
        (*log)["plank_width"] = plank_w;
        (*log)["plank_start_angle"] = theta0;
        (*log)["object_size"] = obj_h;
    }
    return sc;
}

}  // namespace

ProbeQuartet gen_object_persistence_pair(const GenParams& params,
                                         std::uint64_t seed, int group,
                                         const std::string& pair_id_a,
                                         const std::string& pair_id_b,
                                         ParamLog* log) {
    Rng rng(seed);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        OpScene sc = sample_op_scene(params, rng, false, log);

        // Pair A: object present from the start.
        SceneScript a_con = sc.base;
        a_con.bodies.push_back(sc.object);
        a_con.events.push_back(kin_event(sc.fall_start, kOpPlank, sc.path_rest));
        snap_script(a_con);
        sort_events(a_con);

        // Occlusion scan on the consistent rollout: the object must be
        // clearly visible at the start and fully hidden by the falling
        // plank before the pair diverges.
        const auto states = scene::simulate(a_con);
        const double occ0 = scene::occlusion_test(states[0], a_con.camera, kOpObject,
                                                  kOpPlank, params.width,
                                                  params.height);
        if (occ0 > 0.5) continue;
        std::vector<int> window;
        const int last = std::min(sc.divergence_frame, params.n_frames - 1);
        for (int f = sc.fall_start; f <= last; ++f) {
            const int occ[1] = {kOpPlank};
            const auto m = scene::occlusion_measure(
                states[static_cast<std::size_t>(f)], a_con.camera, kOpObject,
                std::span<const int>(occ, 1), params.width, params.height);
            if (m.fraction >= kOcclusionGate && m.base_pixels > 0)
                window.push_back(f);
        }
        if (window.empty()) continue;
        // The propped ending must leave part of the object visible, so
        // the pairing stays detectable in pixels (and the appear-based
        // counterbalance scores positive under the oracle).
        {
            const auto ids = render::visibility_buffer(
                states.back(), render::make_camera(a_con.camera), params.width,
                params.height);
            if (std::count(ids.begin(), ids.end(), kOpObject) < 2) continue;
        }
        const int f_m = pick_jittered(window, rng, params.config.timing_jitter);

        SceneScript a_inc = sc.base;
        a_inc.bodies.push_back(sc.object);
        a_inc.events.push_back(kin_event(sc.fall_start, kOpPlank, sc.path_flat));
        {
            SceneEvent v;
            v.kind = EventKind::vanish;
            v.frame = f_m;
            v.body = kOpObject;
            a_inc.events.push_back(v);
        }
        snap_script(a_inc);
        sort_events(a_inc);

        // Pair B: empty start; the object appears under the occluding
        // plank and props it (counterbalance of pair A).
        SceneScript b_con = sc.base;
        b_con.events.push_back(kin_event(sc.fall_start, kOpPlank, sc.path_flat));
        snap_script(b_con);
        sort_events(b_con);

        SceneScript b_inc = sc.base;
        b_inc.events.push_back(kin_event(sc.fall_start, kOpPlank, sc.path_rest));
        {
            SceneEvent ap;
            ap.kind = EventKind::appear;
            ap.frame = f_m;
            ap.appear_body = sc.object;
            b_inc.events.push_back(ap);
        }
        snap_script(b_inc);
        sort_events(b_inc);

        PairScripts pa{a_con, a_inc, f_m, {kOpObject}, {kOpPlank}};
        PairScripts pb{b_con, b_inc, f_m, {kOpObject}, {kOpPlank}};
        ProbeQuartet q;
        q.a = finalize_pair(Category::object_persistence, pa, seed, group,
                            pair_id_a, params.width, params.height);
        q.b = finalize_pair(Category::object_persistence, pb, seed, group,
                            pair_id_b, params.width, params.height);
        return q;
    }
    throw GenerationError("object_persistence: occlusion window unsatisfiable, seed " +
                          std::to_string(seed));
}

// ======================================================= unchangeableness

namespace {

constexpr int kUcScreen = 1;
constexpr int kUcFirstObject = 2;

const CameraSpec kUcCamera{{0, 1.7, 3.6}, {0, 0.5, 0}, 0.95};

struct UcScene {
    SceneScript script;  // screen + objects, with screen motion events
    std::vector<int> object_ids;
    int hold_start = 0;
    int hold_end = 0;  // inclusive
};

// Places n non-overlapping objects in the given z band.
std::vector<Body> place_objects(Rng& rng, int n, const Range& size_range,
                                double z_lo, double z_hi, bool force_equal_pair) {
    std::vector<Body> objects;
    for (int i = 0; i < n; ++i) {
        for (int tries = 0; tries < 60; ++tries) {
            const double h = (force_equal_pair && i == 1)
                                 ? scene::shape_height(objects[0].shape)
                                 : size_range.sample(*&rng);
            const double x = snap9(rng.uniform(-1.15, 1.15));
            const double z = snap9(rng.uniform(z_lo, z_hi));
            bool ok = true;
            for (const auto& o : objects) {
                const double min_gap =
                    (scene::shape_height(o.shape) + h) / 2.0 + 0.12;
                if (std::fabs(o.pose.position.x - x) < min_gap &&
                    std::fabs(o.pose.position.z - z) < min_gap)
                    ok = false;
            }
            if (!ok) continue;
            const bool cube = (force_equal_pair && i == 1)
                                  ? objects[0].shape.kind == ShapeKind::box
                                  : rng.coin();
            Vec3 color = sample_palette(rng);
            for (const auto& o : objects)
                if (o.color == color) color = sample_palette_except(rng, color);
            const int id = kUcFirstObject + i;
            if (cube)
                objects.push_back(make_box_body(id, ShapeKind::box, {h, h, h},
                                                {x, h / 2, z}, color));
            else
                objects.push_back(make_sphere_body(id, h / 2, {x, h / 2, z}, color));
            break;
        }
    }
    return objects;
}

UcScene sample_uc_scene(const GenParams& params, Rng& rng, bool widen,
                        int n_objects, bool force_equal_pair, ParamLog* log) {
    const CategoryConfig& cfg = params.config;
    auto range = [&](const Range& r) { return widen ? r.widened(cfg.train_widen) : r; };

    UcScene sc;
    sc.script.n_frames = params.n_frames;
    sc.script.camera = kUcCamera;
    sample_floor(rng, sc.script.floor);

    const double zs_lo = widen ? -0.5 : -0.4;
    const double zs_hi = widen ? 0.9 : -0.1;
    auto objects = place_objects(rng, n_objects, range(cfg.uc_object_size), zs_lo,
                                 zs_hi, force_equal_pair);
    if (static_cast<int>(objects.size()) < n_objects)
        throw GenerationError("unchangeableness: object placement failed");
    for (const auto& o : objects) {
        sc.script.bodies.push_back(o);
        sc.object_ids.push_back(o.id);
    }

    const double sw = range(cfg.screen_width).sample(rng);
    const double sh = range(cfg.screen_height).sample(rng);
    const double sz = snap9(widen ? rng.uniform(-0.3, 1.3) : rng.uniform(0.8, 1.2));
    const double y_down = snap9(sh / 2);
    const double y_up = snap9(sh / 2 + 2.3);
    Body screen = make_box_body(kUcScreen, ShapeKind::screen, {sw, sh, 0.06},
                                {0, y_up, sz}, sample_palette(rng));
    sc.script.bodies.insert(sc.script.bodies.begin(), screen);

    const int f_down = rng.uniform_int(1, 2);
    const int descend = 3;
    const int hold = rng.uniform_int(3, 4);
    sc.hold_start = f_down + descend;
    sc.hold_end = sc.hold_start + hold - 1;
    const int f_up = sc.hold_end + 1;

    sc.script.events.push_back(kin_event(
        f_down, kUcScreen,
        linear_path({0, y_up, sz}, {0, y_down, sz}, f_down, f_down + descend)));
    sc.script.events.push_back(kin_event(
        f_up, kUcScreen,
        linear_path({0, y_down, sz}, {0, y_up, sz}, f_up, f_up + descend)));

    if (log) {
        (*log)["screen_width"] = sw;
        (*log)["screen_height"] = sh;
        (*log)["screen_z"] = sz;
        (*log)["object_size"] = scene::shape_height(objects[0].shape);
        (*log)["n_objects"] = n_objects;
    }
    return sc;
}

}  // namespace

ProbePair gen_unchangeableness_pair(const GenParams& params,
                                    UnchangeAttribute attribute,
                                    std::uint64_t seed, int group,
                                    const std::string& pair_id, ParamLog* log) {
    Rng rng(seed);
    if (attribute == UnchangeAttribute::mixed) {
        const UnchangeAttribute opts[3] = {UnchangeAttribute::position,
                                           UnchangeAttribute::color,
                                           UnchangeAttribute::shape};
        attribute = opts[rng.uniform_int(3)];
    }

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const int base_n = attribute == UnchangeAttribute::position
                               ? rng.uniform_int(2, 4)
                               : rng.uniform_int(1, 4);
        const int n = std::min(6, base_n + params.config.extra_objects);
        UcScene sc;
        try {
            sc = sample_uc_scene(params, rng, false, n,
                                 attribute == UnchangeAttribute::position, log);
        } catch (const GenerationError&) {
            continue;
        }

        // Manipulated bodies.
        std::vector<int> targets;
        if (attribute == UnchangeAttribute::position) {
            // The first two objects are constructed with equal shape and
            // size so the pose swap stays visually coherent.
            targets = {sc.object_ids[0], sc.object_ids[1]};
        } else {
            targets = {sc.object_ids[static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::uint64_t>(sc.object_ids.size())))]};
        }

        // Occlusion window: every target fully hidden by the screen.
        const auto states = scene::simulate(sc.script);
        std::vector<int> window;
        for (int f = sc.hold_start; f <= sc.hold_end; ++f) {
            bool all = true;
            for (int id : targets) {
                const int occ[1] = {kUcScreen};
                const auto m = scene::occlusion_measure(
                    states[static_cast<std::size_t>(f)], sc.script.camera, id,
                    std::span<const int>(occ, 1), params.width, params.height);
                if (m.fraction < kOcclusionGate || m.base_pixels == 0) all = false;
            }
            if (all) window.push_back(f);
        }
        if (window.empty()) continue;
        // Targets must also be visible before the screen drops.
        bool visible0 = true;
        for (int id : targets)
            if (scene::occlusion_test(states[0], sc.script.camera, id, kUcScreen,
                                      params.width, params.height) > 0.5)
                visible0 = false;
        if (!visible0) continue;
        const int f_m = pick_jittered(window, rng, params.config.timing_jitter);

        SceneScript con = sc.script;
        SceneScript inc = sc.script;
        SceneEvent e;
        e.frame = f_m;
        switch (attribute) {
            case UnchangeAttribute::position: {
                e.kind = EventKind::swap_positions;
                e.body = targets[0];
                e.body2 = targets[1];
                break;
            }
            case UnchangeAttribute::color: {
                e.kind = EventKind::recolor;
                e.body = targets[0];
                const Body* t = nullptr;
                for (const auto& b : sc.script.bodies)
                    if (b.id == targets[0]) t = &b;
                e.rgb = sample_palette_except(rng, t->color);
                break;
            }
            case UnchangeAttribute::shape: {
                e.kind = EventKind::reshape;
                e.body = targets[0];
                const Body* t = nullptr;
                for (const auto& b : sc.script.bodies)
                    if (b.id == targets[0]) t = &b;
                if (t->shape.kind == ShapeKind::sphere) {
                    const double edge = snap9(2.0 * t->shape.radius);
                    e.new_shape = BodyShape{ShapeKind::box, {edge, edge, edge}, 0, 0};
                } else {
                    e.new_shape = BodyShape{ShapeKind::sphere, {},
                                            snap9(t->shape.extents.y / 2), 0};
                }
                break;
            }
            case UnchangeAttribute::mixed: break;  // unreachable
        }
        inc.events.push_back(e);
        snap_script(con);
        snap_script(inc);
        sort_events(con);
        sort_events(inc);

        PairScripts ps{con, inc, f_m, targets, {kUcScreen}};
        return finalize_pair(Category::unchangeableness, ps, seed, group, pair_id,
                             params.width, params.height);
    }
    throw GenerationError("unchangeableness: constraints unsatisfiable, seed " +
                          std::to_string(seed));
}

// ============================================================ continuity

namespace {

constexpr int kCtPillarL = 1;
constexpr int kCtPillarR = 2;
constexpr int kCtPillarM = 3;
constexpr int kCtBall = 4;
constexpr int kCtGapBlock = 5;

const CameraSpec kCtCamera{{0, 1.5, 3.8}, {0, 0.45, 0}, 0.95};

struct CtScene {
    SceneScript script;
    bool rightward = true;
};

CtScene sample_ct_scene(const GenParams& params, Rng& rng, bool widen,
                        bool with_extra_pillar, ParamLog* log) {
    const CategoryConfig& cfg = params.config;
    auto range = [&](const Range& r) { return widen ? r.widened(cfg.train_widen) : r; };

    CtScene sc;
    sc.script.n_frames = params.n_frames;
    sc.script.camera = kCtCamera;
    sample_floor(rng, sc.script.floor);

    const double gap = range(cfg.pillar_gap).sample(rng);
    const double w1 = range(cfg.pillar_width).sample(rng);
    const double w2 = range(cfg.pillar_width).sample(rng);
    const double ph = range(cfg.pillar_height).sample(rng);
    const double pz = snap9(widen ? rng.uniform(0.2, 0.6) : rng.uniform(0.3, 0.5));
    const Vec3 pillar_color = sample_palette(rng);
    sc.script.bodies.push_back(make_box_body(
        kCtPillarL, ShapeKind::pillar, {w1, ph, 0.28},
        {snap9(-(gap / 2 + w1 / 2)), snap9(ph / 2), pz}, pillar_color));
    sc.script.bodies.push_back(make_box_body(
        kCtPillarR, ShapeKind::pillar, {w2, ph, 0.28},
        {snap9(gap / 2 + w2 / 2), snap9(ph / 2), pz}, pillar_color));
    if (with_extra_pillar) {
        const double w3 = snap9(std::min(range(cfg.pillar_width).sample(rng),
                                         gap - 2 * cfg.ball_radius.hi - 0.25));
        if (w3 > 0.15)
            sc.script.bodies.push_back(make_box_body(
                kCtPillarM, ShapeKind::pillar, {w3, ph, 0.28},
                {snap9(rng.uniform(-0.08, 0.08) * gap), snap9(ph / 2), pz},
                pillar_color));
    }

    const double r = range(cfg.ball_radius).sample(rng);
    const double bz = snap9(widen ? rng.uniform(-0.5, 0.9) : rng.uniform(-0.35, -0.15));
    sc.rightward = rng.coin();
    double x_start = snap9(rng.uniform(1.9, 2.2));
    double x_end = snap9(rng.uniform(1.9, 2.2));
    if (sc.rightward) x_start = -x_start;
    else x_end = -x_end;
    const double vx =
        snap9((x_end - x_start) / ((params.n_frames - 1) * sc.script.dt));
    Body ball = make_sphere_body(kCtBall, r, {x_start, r, bz},
                                 sample_palette_except(rng, pillar_color), true);
    ball.velocity = {vx, 0, 0};
    sc.script.bodies.push_back(ball);

    if (log) {
        (*log)["pillar_gap"] = gap;
        (*log)["pillar_width"] = w1;
        (*log)["pillar_height"] = ph;
        (*log)["ball_radius"] = r;
        (*log)["ball_z"] = bz;
    }
    return sc;
}

}  // namespace

ProbePair gen_continuity_pair(const GenParams& params, std::uint64_t seed,
                              int group, const std::string& pair_id,
                              ParamLog* log) {
    Rng rng(seed);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        CtScene sc = sample_ct_scene(params, rng, false, params.config.extra_pillar,
                                     log);
        const int first = sc.rightward ? kCtPillarL : kCtPillarR;
        const int second = sc.rightward ? kCtPillarR : kCtPillarL;

        const auto states = scene::simulate(sc.script);
        std::vector<int> win1, win2;
        bool gap_visible = false;
        for (int f = 1; f < params.n_frames; ++f) {
            const auto& st = states[static_cast<std::size_t>(f)];
            const int id1[1] = {first}, id2[1] = {second};
            const auto m1 = scene::occlusion_measure(
                st, sc.script.camera, kCtBall, std::span<const int>(id1, 1),
                params.width, params.height);
            const auto m2 = scene::occlusion_measure(
                st, sc.script.camera, kCtBall, std::span<const int>(id2, 1),
                params.width, params.height);
            // base > 0 pins the occlusion on this pillar specifically.
            if (m1.fraction >= kOcclusionGate && m1.base_pixels > 0)
                win1.push_back(f);
            if (m2.fraction >= kOcclusionGate && m2.base_pixels > 0)
                win2.push_back(f);
        }
        if (win1.empty() || win2.empty()) continue;
        const int f2_base = win2.front();
        std::vector<int> win1_valid;
        for (int f : win1)
            if (f < f2_base) win1_valid.push_back(f);
        if (win1_valid.empty()) continue;
        const int f1 = pick_jittered(win1_valid, rng, params.config.timing_jitter);
        const int f2 = f2_base;

        // The ball must actually show between the occluders at some frame
        // in the consistent probe, otherwise there is nothing to violate.
        for (int f = f1 + 1; f < f2; ++f) {
            const auto ids = render::visibility_buffer(
                states[static_cast<std::size_t>(f)],
                render::make_camera(sc.script.camera), params.width, params.height);
            if (std::count(ids.begin(), ids.end(), kCtBall) > 0) gap_visible = true;
        }
        if (!gap_visible) continue;

        SceneScript con = sc.script;
        SceneScript inc = sc.script;
        SceneEvent v;
        v.kind = EventKind::vanish;
        v.frame = f1;
        v.body = kCtBall;
        SceneEvent ap;
        ap.kind = EventKind::appear;
        ap.frame = f2;
        ap.appear_body = sc.script.bodies.back();  // the ball spec
        inc.events.push_back(v);
        inc.events.push_back(ap);
        snap_script(con);
        snap_script(inc);
        sort_events(con);
        sort_events(inc);

        std::vector<int> occluders{kCtPillarL, kCtPillarR};
        if (params.config.extra_pillar && con.bodies.size() > 3) {
            for (const auto& b : con.bodies)
                if (b.id == kCtPillarM) occluders.push_back(kCtPillarM);
        }
        PairScripts ps{con, inc, f1, {kCtBall}, occluders};
        return finalize_pair(Category::continuity, ps, seed, group, pair_id,
                             params.width, params.height);
    }
    throw GenerationError("continuity: occlusion windows unsatisfiable, seed " +
                          std::to_string(seed));
}

// ============================================================== solidity

namespace {

constexpr int kSoContainer = 1;
constexpr int kSoBlock = 2;

const CameraSpec kSoCamera{{0, 2.6, 3.1}, {0, 0.25, 0}, 0.95};

// Sight line over the front rim must dip below the rim at the back wall
// (interior top visible) but stay above the base (base never visible).
bool solidity_perspective_ok(const CameraSpec& cam, double cx, double cz,
                             double depth, double height, double wall) {
    const double z_front = cz + depth / 2;
    const double z_back = cz - depth / 2 + wall;
    const double t = (cam.eye.z - z_back) / (cam.eye.z - z_front);
    const double y_at_back = cam.eye.y + (height - cam.eye.y) * t;
    (void)cx;
    return y_at_back < height - 0.03 && y_at_back > wall + 0.05;
}

}  // namespace

ProbePair gen_solidity_pair(const GenParams& params, std::uint64_t seed,
                            int group, const std::string& pair_id,
                            ParamLog* log) {
    Rng rng(seed);
    const CategoryConfig& cfg = params.config;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        SceneScript base;
        base.n_frames = params.n_frames;
        base.camera = kSoCamera;
        sample_floor(rng, base.floor);

        const double cw = cfg.so_container_width.sample(rng);
        const double ch = cfg.so_container_height.sample(rng);
        const double cd = snap9(rng.uniform(0.65, 0.85));
        const double wall = 0.05;
        const double cx = snap9(rng.uniform(-0.2, 0.2));
        const double cz = snap9(rng.uniform(-0.15, 0.15));
        if (!solidity_perspective_ok(base.camera, cx, cz, cd, ch, wall)) continue;

        Body container;
        container.id = kSoContainer;
        container.shape = BodyShape{ShapeKind::open_container, {cw, ch, cd}, 0, wall};
        container.pose.position = {cx, snap9(ch / 2), cz};
        container.color = sample_palette(rng);
        base.bodies.push_back(container);

        const double protrusion = cfg.so_protrusion.sample(rng);
        const double bh = snap9(ch + protrusion - wall);
        const double inner_w = cw - 2 * wall;
        const double inner_d = cd - 2 * wall;
        const double bw = snap9(rng.uniform(0.28, std::min(0.45, inner_w - 0.12)));
        const double bd = snap9(rng.uniform(0.28, std::min(0.45, inner_d - 0.1)));
        if (bw < 0.2 || bd < 0.2) continue;
        const double bx = snap9(cx + rng.uniform(-1.0, 1.0) *
                                         std::max(0.0, (inner_w - bw) / 2 - 0.04));
        const double bz = cz;

        const int f_release = rng.uniform_int(1, 1 + cfg.timing_jitter);
        const double clearance = snap9(0.55 + rng.uniform(0.0, 0.25));
        const double spawn_y =
            spawn_y_above_frustum(base.camera, params.width, params.height, bx, bz,
                                  {bw, bh, bd}, clearance) +
            bh / 2;

        Body block = make_box_body(kSoBlock, ShapeKind::box, {bw, bh, bd},
                                   {bx, snap9(spawn_y), bz},
                                   sample_palette_except(rng, container.color));
        base.bodies.push_back(block);

        SceneEvent rel;
        rel.kind = EventKind::release;
        rel.frame = f_release;
        rel.body = kSoBlock;

        SceneScript con = base;
        con.events.push_back(rel);
        snap_script(con);
        sort_events(con);

        SceneScript inc = base;
        inc.events.push_back(rel);
        {
            SceneEvent ph;
            ph.kind = EventKind::phase_through;
            ph.frame = f_release;
            ph.body = kSoBlock;
            ph.anchor = false;
            inc.events.push_back(ph);
        }
        snap_script(inc);
        sort_events(inc);

        // The manipulation happens while the block is still off-frame.
        const auto states_i = scene::simulate(inc);
        if (scene::occlusion_test(states_i[static_cast<std::size_t>(f_release)],
                                  base.camera, kSoBlock, kSoContainer, params.width,
                                  params.height) < 1.0)
            continue;

        // End-state checks: consistent block rests protruding and visible;
        // inconsistent block has left the view entirely. The landing step
        // must also carry the unclamped block below the rim, so the first
        // visible divergence coincides with the rim crossing.
        const auto states_c = scene::simulate(con);
        const render::Camera cam = render::make_camera(base.camera);
        const auto ids_c = render::visibility_buffer(
            states_c.back(), cam, params.width, params.height);
        const auto ids_i = render::visibility_buffer(
            states_i.back(), cam, params.width, params.height);
        const bool c_visible =
            std::count(ids_c.begin(), ids_c.end(), kSoBlock) > 0;
        const bool i_gone = std::count(ids_i.begin(), ids_i.end(), kSoBlock) == 0;
        // The consistent block must have landed by the final frame.
        const auto& final_block = *states_c.back().find(kSoBlock);
        const bool rested =
            std::fabs(final_block.body.pose.position.y - (wall + bh / 2)) < 1e-9;
        if (!c_visible || !i_gone || !rested) continue;
        int t_land = -1;
        for (int f = 1; f < params.n_frames; ++f) {
            const auto* b = states_c[static_cast<std::size_t>(f)].find(kSoBlock);
            if (std::fabs(b->body.pose.position.y - (wall + bh / 2)) < 1e-9) {
                t_land = f;
                break;
            }
        }
        if (t_land < 0) continue;
        const double rim = ch;
        const double top_inc =
            states_i[static_cast<std::size_t>(t_land)].find(kSoBlock)->body
                .pose.position.y + bh / 2;
        if (!(top_inc < rim - 0.02)) continue;

        if (log) {
            (*log)["container_width"] = cw;
            (*log)["container_height"] = ch;
            (*log)["block_height"] = bh;
            (*log)["protrusion"] = protrusion;
            (*log)["spawn_clearance"] = clearance;
        }
        PairScripts ps{con, inc, f_release, {kSoBlock}, {kSoContainer}};
        return finalize_pair(Category::solidity, ps, seed, group, pair_id,
                             params.width, params.height);
    }
    throw GenerationError("solidity: constraints unsatisfiable, seed " +
                          std::to_string(seed));
}

// ============================================================ containment

namespace {

constexpr int kCoContainer = 1;
constexpr int kCoRod = 2;
constexpr int kCoCube = 3;

const CameraSpec kCoCamera{{0, 1.15, 3.7}, {0, 0.4, 0}, 0.95};

}  // namespace

ProbePair gen_containment_pair(const GenParams& params, std::uint64_t seed,
                               int group, const std::string& pair_id,
                               ParamLog* log) {
    Rng rng(seed);
    const CategoryConfig& cfg = params.config;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        SceneScript base;
        base.n_frames = params.n_frames;
        base.camera = kCoCamera;
        sample_floor(rng, base.floor);

        const double cw = cfg.co_container_width.sample(rng);
        const double ch = cfg.co_container_height.sample(rng);
        const double cd = snap9(rng.uniform(0.6, 0.8));
        const double wall = 0.05;
        const double cx = snap9(rng.uniform(-0.35, 0.05));
        const double cz = snap9(rng.uniform(-0.1, 0.1));

        Body container;
        container.id = kCoContainer;
        container.shape = BodyShape{ShapeKind::open_container, {cw, ch, cd}, 0, wall};
        container.pose.position = {cx, snap9(ch / 2), cz};
        container.color = sample_palette(rng);
        base.bodies.push_back(container);

        // Cube small enough to vanish below the rim once it lands.
        const double e_max = std::min({cfg.co_cube_size.hi, cw - 2 * wall - 0.1,
                                       ch - wall - 0.08});
        if (!(cfg.co_cube_size.lo < e_max)) continue;
        const double edge = Range{cfg.co_cube_size.lo, e_max}.sample(rng);
        const double drop_y = snap9(rng.uniform(1.25, 1.6));

        Body cube = make_box_body(kCoCube, ShapeKind::box, {edge, edge, edge},
                                  {cx, drop_y, cz},
                                  sample_palette_except(rng, container.color));
        base.bodies.push_back(cube);

        Body rod = make_box_body(kCoRod, ShapeKind::rod, {0.09, 1.0, 0.09},
                                 {cx, 0, cz}, sample_palette(rng));
        const double rod_hi = spawn_y_above_frustum(base.camera, params.width,
                                                    params.height, cx, cz,
                                                    rod.shape.extents, 0.1) +
                              0.5;
        rod.pose.position.y = snap9(rod_hi);
        base.bodies.push_back(rod);

        const int f_release = rng.uniform_int(0, 1);
        SceneEvent rel;
        rel.kind = EventKind::release;
        rel.frame = f_release;
        rel.body = kCoCube;

        // Find the landing frame analytically via a scratch simulation.
        SceneScript probe = base;
        probe.events.push_back(rel);
        snap_script(probe);
        const auto probe_states = scene::simulate(probe);
        const double rest_y = wall + scene::shape_height(cube.shape) / 2;
        int t_land = -1;
        for (int f = 0; f < params.n_frames; ++f) {
            const auto* b = probe_states[static_cast<std::size_t>(f)].find(kCoCube);
            if (std::fabs(b->body.pose.position.y - rest_y) < 1e-9) {
                t_land = f;
                break;
            }
        }
        if (t_land < 0 || t_land > 5) continue;

        const int f_rod = t_land + 1;
        const int rod_down_frames = 2;
        const double rod_low = snap9(ch + 0.5);
        const int f_move = f_rod + rod_down_frames + rng.uniform_int(0, 1);
        const int move_frames = rng.uniform_int(3, 4);
        if (f_move + move_frames > params.n_frames - 2) continue;
        double dx = cfg.co_move_distance.sample(rng);
        if (rng.coin()) dx = -dx;
        if (cx + dx > 1.4 || cx + dx < -1.4) dx = -dx;

        auto with_motion = [&](bool cube_follows) {
            SceneScript s = base;
            s.events.push_back(rel);
            s.events.push_back(kin_event(
                f_rod, kCoRod,
                linear_path({cx, rod_hi, cz}, {cx, rod_low, cz}, f_rod,
                            f_rod + rod_down_frames)));
            s.events.push_back(kin_event(
                f_move, kCoContainer,
                linear_path({cx, ch / 2, cz}, {cx + dx, ch / 2, cz}, f_move,
                            f_move + move_frames)));
            s.events.push_back(kin_event(
                f_move, kCoRod,
                linear_path({cx, rod_low, cz}, {cx + dx, rod_low, cz}, f_move,
                            f_move + move_frames)));
            if (cube_follows)
                s.events.push_back(kin_event(
                    f_move, kCoCube,
                    linear_path({cx, rest_y, cz}, {cx + dx, rest_y, cz}, f_move,
                                f_move + move_frames)));
            return s;
        };

        SceneScript con = with_motion(true);
        snap_script(con);
        sort_events(con);

        // Occlusion window between landing and the move. Events at frame
        // f mutate the pre-integration state, so the freeze may only be
        // scheduled once the cube has already rested at f-1.
        const auto states_c = scene::simulate(con);
        std::vector<int> window;
        for (int f = t_land + 1; f < f_move; ++f) {
            const int occ[1] = {kCoContainer};
            const auto m = scene::occlusion_measure(
                states_c[static_cast<std::size_t>(f)], con.camera, kCoCube,
                std::span<const int>(occ, 1), params.width, params.height);
            if (m.fraction >= kOcclusionGate && m.base_pixels > 0)
                window.push_back(f);
        }
        if (window.empty()) continue;
        // The cube must be visible while it drops.
        if (scene::occlusion_test(states_c[0], con.camera, kCoCube, kCoContainer,
                                  params.width, params.height) > 0.5)
            continue;
        const int f_m = pick_jittered(window, rng, cfg.timing_jitter);

        SceneScript inc = with_motion(true);
        {
            SceneEvent ph;
            ph.kind = EventKind::phase_through;
            ph.frame = f_m;
            ph.body = kCoCube;
            ph.anchor = true;
            inc.events.push_back(ph);
        }
        snap_script(inc);
        sort_events(inc);

        // Final-frame contrast: consistent cube hidden at the new spot,
        // inconsistent cube revealed at the old one. The frozen cube must
        // sit exactly at its rest pose.
        const auto states_i = scene::simulate(inc);
        if (!(states_i[static_cast<std::size_t>(f_m)].find(kCoCube)->body.pose ==
              states_c[static_cast<std::size_t>(f_m)].find(kCoCube)->body.pose))
            continue;
        const render::Camera cam = render::make_camera(base.camera);
        const auto ids_c = render::visibility_buffer(states_c.back(), cam,
                                                     params.width, params.height);
        const auto ids_i = render::visibility_buffer(states_i.back(), cam,
                                                     params.width, params.height);
        const bool c_hidden = std::count(ids_c.begin(), ids_c.end(), kCoCube) == 0;
        const bool i_revealed = std::count(ids_i.begin(), ids_i.end(), kCoCube) > 0;
        if (!c_hidden || !i_revealed) continue;

        if (log) {
            (*log)["container_width"] = cw;
            (*log)["container_height"] = ch;
            (*log)["cube_size"] = edge;
            (*log)["move_distance"] = std::fabs(dx);
        }
        PairScripts ps{con, inc, f_m, {kCoCube}, {kCoContainer}};
        return finalize_pair(Category::containment, ps, seed, group, pair_id,
                             params.width, params.height);
    }
    throw GenerationError("containment: constraints unsatisfiable, seed " +
                          std::to_string(seed));
}

// ================================================== dispatch + train data

ProbeQuartet gen_pair(Category c, const GenParams& params, std::uint64_t seed,
                      int group, const std::string& pair_id_a,
                      const std::string& pair_id_b, ParamLog* log) {
    switch (c) {
        case Category::object_persistence:
            return gen_object_persistence_pair(params, seed, group, pair_id_a,
                                               pair_id_b, log);
        case Category::unchangeableness: {
            ProbeQuartet q;
            q.a = gen_unchangeableness_pair(params, params.config.attribute, seed,
                                            group, pair_id_a, log);
            return q;
        }
        case Category::continuity: {
            ProbeQuartet q;
            q.a = gen_continuity_pair(params, seed, group, pair_id_a, log);
            return q;
        }
        case Category::solidity: {
            ProbeQuartet q;
            q.a = gen_solidity_pair(params, seed, group, pair_id_a, log);
            return q;
        }
        case Category::containment: {
            ProbeQuartet q;
            q.a = gen_containment_pair(params, seed, group, pair_id_a, log);
            return q;
        }
    }
    throw ConfigError("gen_pair: bad category");
}

namespace {

VideoRecord finish_single(Category c, io::Role role, SceneScript script,
                          std::uint64_t seed, const GenParams& params) {
    snap_script(script);
    sort_events(script);
    VideoRecord r = render_script(script, params.width, params.height);
    r.meta = base_meta(c, role, seed, script);
    r.validate();
    return r;
}

}  // namespace

VideoRecord gen_example(Category c, const GenParams& params, std::uint64_t seed,
                        ParamLog* log) {
    Rng rng(seed);
    const CategoryConfig& cfg = params.config;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        try {
            switch (c) {
                case Category::object_persistence: {
                    OpScene sc = sample_op_scene(params, rng, true, log);
                    SceneScript s = sc.base;
                    if (rng.coin()) {
                        // Plank props on the object.
                        s.bodies.push_back(sc.object);
                        s.events.push_back(
                            kin_event(sc.fall_start, kOpPlank, sc.path_rest));
                    } else {
                        // Plank falls flat in an empty scene.
                        s.events.push_back(
                            kin_event(sc.fall_start, kOpPlank, sc.path_flat));
                    }
                    return finish_single(c, io::Role::train_example, s, seed, params);
                }
                case Category::unchangeableness: {
                    const int n = rng.uniform_int(1, 4);
                    UcScene sc = sample_uc_scene(params, rng, true, n, false, log);
                    return finish_single(c, io::Role::train_example, sc.script, seed,
                                         params);
                }
                case Category::continuity: {
                    CtScene sc = sample_ct_scene(params, rng, true, false, log);
                    return finish_single(c, io::Role::train_example, sc.script, seed,
                                         params);
                }
                case Category::solidity: {
                    SceneScript s;
                    s.n_frames = params.n_frames;
                    s.camera = kSoCamera;
                    sample_floor(rng, s.floor);
                    const double cw = cfg.so_container_width.widened(cfg.train_widen)
                                          .sample(rng);
                    const double ch = cfg.so_container_height.widened(cfg.train_widen)
                                          .sample(rng);
                    const double cd = snap9(rng.uniform(0.6, 0.9));
                    const double wall = 0.05;
                    const double cx = snap9(rng.uniform(-0.3, 0.3));
                    Body container;
                    container.id = kSoContainer;
                    container.shape =
                        BodyShape{ShapeKind::open_container, {cw, ch, cd}, 0, wall};
                    container.pose.position = {cx, snap9(ch / 2), 0};
                    container.color = sample_palette(rng);
                    s.bodies.push_back(container);
                    // Heights from fully-hidden to strongly protruding.
                    const double bh = snap9(rng.uniform(0.2, ch + 0.4));
                    const double bw = snap9(
                        rng.uniform(0.24, std::max(0.26, cw - 2 * wall - 0.12)));
                    const double clearance = snap9(rng.uniform(-0.8, 1.2));
                    const double spawn =
                        clearance > 0
                            ? spawn_y_above_frustum(s.camera, params.width,
                                                    params.height, cx, 0,
                                                    {bw, bh, bw}, clearance) +
                                  bh / 2
                            : snap9(rng.uniform(1.4, 2.2));
                    Body block = make_box_body(
                        kSoBlock, ShapeKind::box, {bw, bh, bw}, {cx, snap9(spawn), 0},
                        sample_palette_except(rng, container.color));
                    s.bodies.push_back(block);
                    SceneEvent rel;
                    rel.kind = EventKind::release;
                    rel.frame = rng.uniform_int(1, 3);
                    rel.body = kSoBlock;
                    s.events.push_back(rel);
                    if (log) {
                        (*log)["container_width"] = cw;
                        (*log)["container_height"] = ch;
                        (*log)["block_height"] = bh;
                        (*log)["protrusion"] = bh + wall - ch;
                        (*log)["spawn_clearance"] = clearance;
                    }
                    return finish_single(c, io::Role::train_example, s, seed, params);
                }
                case Category::containment: {
                    SceneScript s;
                    s.n_frames = params.n_frames;
                    s.camera = kCoCamera;
                    sample_floor(rng, s.floor);
                    const double cw = cfg.co_container_width.widened(cfg.train_widen)
                                          .sample(rng);
                    const double ch = cfg.co_container_height.widened(cfg.train_widen)
                                          .sample(rng);
                    const double cd = snap9(rng.uniform(0.55, 0.85));
                    const double wall = 0.05;
                    const double cx = snap9(rng.uniform(-0.6, 0.2));
                    Body container;
                    container.id = kCoContainer;
                    container.shape =
                        BodyShape{ShapeKind::open_container, {cw, ch, cd}, 0, wall};
                    container.pose.position = {cx, snap9(ch / 2), 0};
                    container.color = sample_palette(rng);
                    s.bodies.push_back(container);
                    const double edge = cfg.co_cube_size.widened(cfg.train_widen)
                                            .sample(rng);
                    const double drop_x = snap9(cx + rng.uniform(-1.0, 1.0));
                    Body cube = make_box_body(
                        kCoCube, ShapeKind::box, {edge, edge, edge},
                        {drop_x, snap9(rng.uniform(1.2, 1.7)), 0},
                        sample_palette_except(rng, container.color));
                    s.bodies.push_back(cube);
                    Body rod = make_box_body(kCoRod, ShapeKind::rod, {0.09, 1.0, 0.09},
                                             {cx, 0, 0}, sample_palette(rng));
                    const double rod_hi =
                        spawn_y_above_frustum(s.camera, params.width, params.height,
                                              cx, 0, rod.shape.extents, 0.1) +
                        0.5;
                    rod.pose.position.y = snap9(rod_hi);
                    s.bodies.push_back(rod);
                    SceneEvent rel;
                    rel.kind = EventKind::release;
                    rel.frame = rng.uniform_int(0, 1);
                    rel.body = kCoCube;
                    s.events.push_back(rel);
                    const int f_rod = rel.frame + 3;
                    const double rod_low = snap9(ch + 0.5);
                    s.events.push_back(kin_event(
                        f_rod, kCoRod,
                        linear_path({cx, rod_hi, 0}, {cx, rod_low, 0}, f_rod,
                                    f_rod + 2)));
                    if (rng.coin()) {
                        const int f_move = f_rod + 2 + rng.uniform_int(0, 1);
                        const int mf = rng.uniform_int(3, 4);
                        double dx = cfg.co_move_distance.widened(cfg.train_widen)
                                        .sample(rng);
                        if (rng.coin()) dx = -dx;
                        s.events.push_back(kin_event(
                            f_move, kCoContainer,
                            linear_path({cx, ch / 2, 0}, {cx + dx, ch / 2, 0}, f_move,
                                        f_move + mf)));
                        s.events.push_back(kin_event(
                            f_move, kCoRod,
                            linear_path({cx, rod_low, 0}, {cx + dx, rod_low, 0},
                                        f_move, f_move + mf)));
                        if (std::fabs(drop_x - cx) < (cw - 2 * wall) / 2) {
                            // Cube landed inside: it moves with the container.
                            const double rest_y = wall + edge / 2;
                            s.events.push_back(kin_event(
                                f_move, kCoCube,
                                linear_path({drop_x, rest_y, 0},
                                            {drop_x + dx, rest_y, 0}, f_move,
                                            f_move + mf)));
                        }
                        if (log) (*log)["move_distance"] = std::fabs(dx);
                    }
                    if (log) {
                        (*log)["container_width"] = cw;
                        (*log)["container_height"] = ch;
                        (*log)["cube_size"] = edge;
                        if (!log->count("move_distance"))
                            (*log)["move_distance"] = 0.0;
                    }
                    return finish_single(c, io::Role::train_example, s, seed, params);
                }
            }
        } catch (const GenerationError&) {
            continue;
        }
    }
    throw GenerationError("gen_example: failed after max attempts, seed " +
                          std::to_string(seed));
}

VideoRecord gen_controls(Category c, const GenParams& params, std::uint64_t seed,
                         ParamLog* log) {
    Rng rng(seed);
    const CategoryConfig& cfg = params.config;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        try {
            switch (c) {
                case Category::object_persistence: {
                    // Plank falls flat; the object, when present, sits away
                    // from the fall line and never supports it.
                    OpScene sc = sample_op_scene(params, rng, true, log);
                    SceneScript s = sc.base;
                    s.events.push_back(
                        kin_event(sc.fall_start, kOpPlank, sc.path_flat));
                    if (rng.coin()) {
                        Body obj = sc.object;
                        const double pw = sc.base.bodies[0].shape.extents.x;
                        const double side = rng.coin() ? 1.0 : -1.0;
                        obj.pose.position.x = snap9(
                            side * (pw / 2 +
                                    scene::shape_height(obj.shape) / 2 +
                                    rng.uniform(0.15, 0.5)));
                        obj.pose.position.z = snap9(rng.uniform(-1.4, -0.4));
                        s.bodies.push_back(obj);
                    }
                    return finish_single(c, io::Role::control, s, seed, params);
                }
                case Category::unchangeableness: {
                    // Training scene with either the screen or the objects
                    // omitted.
                    const int n = rng.uniform_int(1, 4);
                    UcScene sc = sample_uc_scene(params, rng, true, n, false, log);
                    SceneScript s = sc.script;
                    if (rng.coin()) {
                        // objects only: drop the screen and its motion
                        s.bodies.erase(s.bodies.begin());
                        s.events.clear();
                    } else {
                        // screen only
                        s.bodies.resize(1);
                    }
                    return finish_single(c, io::Role::control, s, seed, params);
                }
                case Category::continuity: {
                    // A block fills the gap; the ball shows only outside it.
                    CtScene sc = sample_ct_scene(params, rng, true, false, log);
                    SceneScript s = sc.script;
                    const Body& pl = s.bodies[0];
                    const Body& pr = s.bodies[1];
                    const double x_l = pl.pose.position.x + pl.shape.extents.x / 2;
                    const double x_r = pr.pose.position.x - pr.shape.extents.x / 2;
                    const double w = snap9(x_r - x_l + 0.12);
                    const double h = snap9(pl.shape.extents.y * 0.95);
                    if (w > 0.1)
                        s.bodies.push_back(make_box_body(
                            kCtGapBlock, ShapeKind::box, {w, h, 0.28},
                            {snap9((x_l + x_r) / 2), snap9(h / 2),
                             pl.pose.position.z},
                            pl.color));
                    return finish_single(c, io::Role::control, s, seed, params);
                }
                case Category::solidity: {
                    // Empty container, or the block dropping behind it.
                    SceneScript s;
                    s.n_frames = params.n_frames;
                    s.camera = kSoCamera;
                    sample_floor(rng, s.floor);
                    const double cw = cfg.so_container_width.widened(cfg.train_widen)
                                          .sample(rng);
                    const double ch = cfg.so_container_height.widened(cfg.train_widen)
                                          .sample(rng);
                    const double cd = snap9(rng.uniform(0.6, 0.9));
                    const double cx = snap9(rng.uniform(-0.3, 0.3));
                    Body container;
                    container.id = kSoContainer;
                    container.shape =
                        BodyShape{ShapeKind::open_container, {cw, ch, cd}, 0, 0.05};
                    container.pose.position = {cx, snap9(ch / 2), 0};
                    container.color = sample_palette(rng);
                    s.bodies.push_back(container);
                    if (log) {
                        (*log)["container_width"] = cw;
                        (*log)["container_height"] = ch;
                    }
                    if (rng.coin()) {
                        const double bh = snap9(rng.uniform(0.25, ch));
                        const double bw = snap9(rng.uniform(0.24, 0.4));
                        const double bz = snap9(-cd / 2 - bw / 2 - 0.08);
                        const double spawn =
                            spawn_y_above_frustum(s.camera, params.width,
                                                  params.height, cx, bz,
                                                  {bw, bh, bw},
                                                  snap9(rng.uniform(0.5, 0.9))) +
                            bh / 2;
                        Body block = make_box_body(
                            kSoBlock, ShapeKind::box, {bw, bh, bw},
                            {cx, snap9(spawn), bz},
                            sample_palette_except(rng, container.color));
                        s.bodies.push_back(block);
                        SceneEvent rel;
                        rel.kind = EventKind::release;
                        rel.frame = rng.uniform_int(1, 3);
                        rel.body = kSoBlock;
                        s.events.push_back(rel);
                        if (log) {
                            (*log)["block_height"] = bh;
                            (*log)["protrusion"] = bh + 0.05 - ch;
                            (*log)["spawn_clearance"] = 0.7;
                        }
                    } else if (log) {
                        (*log)["block_height"] = 0.0;
                        (*log)["protrusion"] = 0.0;
                        (*log)["spawn_clearance"] = 0.0;
                    }
                    return finish_single(c, io::Role::control, s, seed, params);
                }
                case Category::containment: {
                    // Cube falls behind or beside the container; when the
                    // container is moved the cube stays where it landed.
                    SceneScript s;
                    s.n_frames = params.n_frames;
                    s.camera = kCoCamera;
                    sample_floor(rng, s.floor);
                    const double cw = cfg.co_container_width.widened(cfg.train_widen)
                                          .sample(rng);
                    const double ch = cfg.co_container_height.widened(cfg.train_widen)
                                          .sample(rng);
                    const double cd = snap9(rng.uniform(0.55, 0.85));
                    const double cx = snap9(rng.uniform(-0.5, 0.1));
                    Body container;
                    container.id = kCoContainer;
                    container.shape =
                        BodyShape{ShapeKind::open_container, {cw, ch, cd}, 0, 0.05};
                    container.pose.position = {cx, snap9(ch / 2), 0};
                    container.color = sample_palette(rng);
                    s.bodies.push_back(container);
                    const double edge = cfg.co_cube_size.widened(cfg.train_widen)
                                            .sample(rng);
                    const bool behind = rng.coin();
                    const double drop_x =
                        behind ? cx : snap9(cx + (rng.coin() ? 1 : -1) *
                                                     rng.uniform(cw / 2 + 0.2, 1.2));
                    const double drop_z =
                        behind ? snap9(-cd / 2 - edge / 2 - 0.06) : 0.0;
                    Body cube = make_box_body(
                        kCoCube, ShapeKind::box, {edge, edge, edge},
                        {drop_x, snap9(rng.uniform(1.2, 1.7)), drop_z},
                        sample_palette_except(rng, container.color));
                    s.bodies.push_back(cube);
                    Body rod = make_box_body(kCoRod, ShapeKind::rod,
                                             {0.09, 1.0, 0.09}, {cx, 0, 0},
                                             sample_palette(rng));
                    const double rod_hi =
                        spawn_y_above_frustum(s.camera, params.width, params.height,
                                              cx, 0, rod.shape.extents, 0.1) +
                        0.5;
                    rod.pose.position.y = snap9(rod_hi);
                    s.bodies.push_back(rod);
                    SceneEvent rel;
                    rel.kind = EventKind::release;
                    rel.frame = rng.uniform_int(0, 1);
                    rel.body = kCoCube;
                    s.events.push_back(rel);
                    const int f_rod = rel.frame + 3;
                    const double rod_low = snap9(ch + 0.5);
                    s.events.push_back(kin_event(
                        f_rod, kCoRod,
                        linear_path({cx, rod_hi, 0}, {cx, rod_low, 0}, f_rod,
                                    f_rod + 2)));
                    const int f_move = f_rod + 2;
                    const int mf = rng.uniform_int(3, 4);
                    double dx = cfg.co_move_distance.widened(cfg.train_widen)
                                    .sample(rng);
                    if (behind ? (drop_x > cx) : rng.coin()) dx = -dx;
                    s.events.push_back(kin_event(
                        f_move, kCoContainer,
                        linear_path({cx, ch / 2, 0}, {cx + dx, ch / 2, 0}, f_move,
                                    f_move + mf)));
                    s.events.push_back(kin_event(
                        f_move, kCoRod,
                        linear_path({cx, rod_low, 0}, {cx + dx, rod_low, 0}, f_move,
                                    f_move + mf)));
                    if (log) {
                        (*log)["container_width"] = cw;
                        (*log)["container_height"] = ch;
                        (*log)["cube_size"] = edge;
                        (*log)["move_distance"] = std::fabs(dx);
                    }
                    return finish_single(c, io::Role::control, s, seed, params);
                }
            }
        } catch (const GenerationError&) {
            continue;
        }
    }
    throw GenerationError("gen_controls: failed after max attempts, seed " +
                          std::to_string(seed));
}

// ================================================================ corpus

io::Json CorpusSpec::to_json() const {
    io::Json j;
    io::Json cats = io::Json::array();
    for (Category c : categories) cats.push_back(category_name(c));
    j["categories"] = cats;
    j["n_train_examples"] = n_train_examples;
    j["n_controls"] = n_controls;
    j["n_test_pairs"] = n_test_pairs;
    j["n_validation_pairs"] = n_validation_pairs;
    j["width"] = width;
    j["height"] = height;
    j["n_frames"] = n_frames;
    j["master_seed"] = master_seed;
    return j;
}

CorpusSpec CorpusSpec::from_json(const io::Json& j) {
    CorpusSpec s;
    s.categories.clear();
    for (const auto& c : j.at("categories"))
        s.categories.push_back(category_from_name(c.get<std::string>()));
    s.n_train_examples = j.at("n_train_examples").get<int>();
    s.n_controls = j.at("n_controls").get<int>();
    s.n_test_pairs = j.at("n_test_pairs").get<int>();
    s.n_validation_pairs = j.at("n_validation_pairs").get<int>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.n_frames = j.at("n_frames").get<int>();
    s.master_seed = j.at("master_seed").get<std::uint64_t>();
    return s;
}

namespace {

namespace fs = std::filesystem;

std::string index_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06d", i);
    return std::string(buf) + ".voev";
}

io::ManifestEntry write_record(const VideoRecord& r, const fs::path& root,
                               const std::string& rel) {
    const fs::path path = root / rel;
    fs::create_directories(path.parent_path());
    io::write_video(r, path);
    io::ManifestEntry e;
    e.video = rel;
    fs::path meta_rel = rel;
    e.meta = fs::path(rel).replace_extension(".json").generic_string();
    e.video_hash = io::hash_hex(io::file_fnv1a64(root / e.video));
    e.meta_hash = io::hash_hex(io::file_fnv1a64(root / e.meta));
    e.role = r.meta.role;
    e.pair_id = r.meta.pair_id;
    return e;
}

void generate_pair_split(const CorpusSpec& spec, const GenParams& params,
                         Category c, const std::string& split, int n_pairs,
                         const fs::path& root, io::Manifest& manifest) {
    const std::string cat = category_name(c);
    int written = 0;
    int group = 0;
    while (written < n_pairs) {
        const std::uint64_t seed =
            hash64(spec.master_seed, cat, split + "_pair", static_cast<std::uint64_t>(group));
        std::vector<ProbePair> pairs;
        if (c == Category::object_persistence) {
            const int k_a = written;
            const int k_b = written + 1;
            ProbeQuartet q = gen_object_persistence_pair(
                params, seed, group, cat + "/" + split + "/" + std::to_string(k_a),
                k_b < n_pairs ? cat + "/" + split + "/" + std::to_string(k_b)
                              : cat + "/" + split + "/" + std::to_string(k_b),
                nullptr);
            pairs.push_back(std::move(q.a));
            if (k_b < n_pairs) pairs.push_back(std::move(q.b));
        } else {
            ProbeQuartet q = gen_pair(c, params, seed, group,
                                      cat + "/" + split + "/" + std::to_string(written),
                                      "", nullptr);
            pairs.push_back(std::move(q.a));
        }
        for (auto& p : pairs) {
            const int k = written;
            const std::string rel_c = cat + "/" + split + "/" + index_name(2 * k);
            const std::string rel_i = cat + "/" + split + "/" + index_name(2 * k + 1);
            manifest.files[cat][split].push_back(write_record(p.consistent, root, rel_c));
            manifest.files[cat][split].push_back(write_record(p.inconsistent, root, rel_i));
            ++written;
        }
        ++group;
    }
}

}  // namespace

io::Manifest generate_corpus(const CorpusSpec& spec,
                             const std::map<Category, CategoryConfig>& configs,
                             const fs::path& root) {
    fs::create_directories(root);
    io::Manifest manifest;
    manifest.spec_echo = spec.to_json();

    for (Category c : spec.categories) {
        CategoryConfig cfg;
        if (auto it = configs.find(c); it != configs.end()) cfg = it->second;
        cfg.category = c;
        cfg.validate();
        GenParams params{spec.width, spec.height, spec.n_frames, cfg};
        const std::string cat = category_name(c);

        // Train split: examples and controls interleaved by index.
        {
            int ei = 0, ci = 0, idx = 0;
            while (ei < spec.n_train_examples || ci < spec.n_controls) {
                const bool example =
                    (idx % 2 == 0 && ei < spec.n_train_examples) ||
                    ci >= spec.n_controls;
                VideoRecord r;
                if (example) {
                    r = gen_example(c, params,
                                    hash64(spec.master_seed, cat, "train_example",
                                           static_cast<std::uint64_t>(ei)));
                    ++ei;
                } else {
                    r = gen_controls(c, params,
                                     hash64(spec.master_seed, cat, "control",
                                            static_cast<std::uint64_t>(ci)));
                    ++ci;
                }
                const std::string rel = cat + "/train/" + index_name(idx);
                manifest.files[cat]["train"].push_back(write_record(r, root, rel));
                ++idx;
            }
        }

        generate_pair_split(spec, params, c, "test", spec.n_test_pairs, root,
                            manifest);
        generate_pair_split(spec, params, c, "validation", spec.n_validation_pairs,
                            root, manifest);
    }

    io::write_manifest(manifest, root);
    return manifest;
}

}  // namespace voe::gen
