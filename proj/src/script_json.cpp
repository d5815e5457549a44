#include "voe/script_json.hpp"

namespace voe::io {

using scene::Axis;
using scene::Body;
using scene::BodyShape;
using scene::EventKind;
using scene::KinematicPath;
using scene::Pose;
using scene::SceneEvent;
using scene::SceneScript;
using scene::ShapeKind;
using scene::Vec3;

namespace {

Json vec_to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("expected 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::X: return "x";
        case Axis::Y: return "y";
        case Axis::Z: return "z";
    }
    return "y";
}

Axis axis_from_name(const std::string& s) {
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    throw FormatError("unknown axis: " + s);
}

const char* shape_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::box: return "box";
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::open_container: return "open_container";
        case ShapeKind::plank: return "plank";
        case ShapeKind::pillar: return "pillar";
        case ShapeKind::screen: return "screen";
        case ShapeKind::rod: return "rod";
    }
    return "box";
}

ShapeKind shape_from_name(const std::string& s) {
    for (ShapeKind k : {ShapeKind::box, ShapeKind::sphere, ShapeKind::open_container,
                        ShapeKind::plank, ShapeKind::pillar, ShapeKind::screen,
                        ShapeKind::rod})
        if (shape_name(k) == s) return k;
    throw FormatError("unknown shape kind: " + s);
}

Json shape_to_json(const BodyShape& s) {
    Json j;
    j["kind"] = shape_name(s.kind);
    if (s.kind == ShapeKind::sphere) {
        j["radius"] = s.radius;
    } else {
        j["extents"] = vec_to_json(s.extents);
        if (s.kind == ShapeKind::open_container) j["wall"] = s.wall;
    }
    return j;
}

BodyShape shape_from_json(const Json& j) {
    BodyShape s;
    s.kind = shape_from_name(j.at("kind").get<std::string>());
    if (s.kind == ShapeKind::sphere) {
        s.radius = j.at("radius").get<double>();
    } else {
        s.extents = vec_from_json(j.at("extents"));
        if (s.kind == ShapeKind::open_container) s.wall = j.at("wall").get<double>();
    }
    return s;
}

Json pose_to_json(const Pose& p) {
    Json j;
    j["position"] = vec_to_json(p.position);
    j["axis"] = axis_name(p.axis);
    j["angle"] = p.angle;
    return j;
}

Pose pose_from_json(const Json& j) {
    Pose p;
    p.position = vec_from_json(j.at("position"));
    p.axis = axis_from_name(j.at("axis").get<std::string>());
    p.angle = j.at("angle").get<double>();
    return p;
}

Json body_to_json(const Body& b) {
    Json j;
    j["id"] = b.id;
    j["shape"] = shape_to_json(b.shape);
    j["pose"] = pose_to_json(b.pose);
    j["velocity"] = vec_to_json(b.velocity);
    j["angular_velocity"] = b.angular_velocity;
    j["color"] = vec_to_json(b.color);
    j["dynamic"] = b.dynamic;
    return j;
}

Body body_from_json(const Json& j) {
    Body b;
    b.id = j.at("id").get<int>();
    b.shape = shape_from_json(j.at("shape"));
    b.pose = pose_from_json(j.at("pose"));
    b.velocity = vec_from_json(j.at("velocity"));
    b.angular_velocity = j.at("angular_velocity").get<double>();
    b.color = vec_from_json(j.at("color"));
    b.dynamic = j.at("dynamic").get<bool>();
    return b;
}

Json path_to_json(const KinematicPath& p) {
    Json j;
    j["start_frame"] = p.start_frame;
    j["end_frame"] = p.end_frame;
    if (p.kind == KinematicPath::Kind::linear) {
        j["kind"] = "linear";
        j["from"] = vec_to_json(p.from);
        j["to"] = vec_to_json(p.to);
        j["move_axis"] = axis_name(p.move_axis);
        j["fixed_angle"] = p.fixed_angle;
    } else {
        j["kind"] = "hinge";
        j["hinge_point"] = vec_to_json(p.hinge_point);
        j["angle_start"] = p.angle_start;
        j["rate"] = p.rate;
        j["angle_end"] = p.angle_end;
        j["length"] = p.length;
        j["thickness"] = p.thickness;
    }
    return j;
}

KinematicPath path_from_json(const Json& j) {
    KinematicPath p;
    p.start_frame = j.at("start_frame").get<int>();
    p.end_frame = j.at("end_frame").get<int>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        p.kind = KinematicPath::Kind::linear;
        p.from = vec_from_json(j.at("from"));
        p.to = vec_from_json(j.at("to"));
        p.move_axis = axis_from_name(j.at("move_axis").get<std::string>());
        p.fixed_angle = j.at("fixed_angle").get<double>();
    } else if (kind == "hinge") {
        p.kind = KinematicPath::Kind::hinge;
        p.hinge_point = vec_from_json(j.at("hinge_point"));
        p.angle_start = j.at("angle_start").get<double>();
        p.rate = j.at("rate").get<double>();
        p.angle_end = j.at("angle_end").get<double>();
        p.length = j.at("length").get<double>();
        p.thickness = j.at("thickness").get<double>();
    } else {
        throw FormatError("unknown path kind: " + kind);
    }
    return p;
}

Json event_to_json(const SceneEvent& e) {
    Json j;
    j["frame"] = e.frame;
    j["kind"] = scene::event_kind_name(e.kind);
    switch (e.kind) {
        case EventKind::release:
        case EventKind::vanish:
            j["body"] = e.body;
            break;
        case EventKind::kinematic_move:
            j["body"] = e.body;
            j["path"] = path_to_json(e.path);
            break;
        case EventKind::appear:
            j["appear_body"] = body_to_json(e.appear_body);
            break;
        case EventKind::teleport:
            j["body"] = e.body;
            j["new_pose"] = pose_to_json(e.new_pose);
            break;
        case EventKind::swap_positions:
            j["body"] = e.body;
            j["body2"] = e.body2;
            break;
        case EventKind::recolor:
            j["body"] = e.body;
            j["rgb"] = vec_to_json(e.rgb);
            break;
        case EventKind::reshape:
            j["body"] = e.body;
            j["new_shape"] = shape_to_json(e.new_shape);
            break;
        case EventKind::phase_through:
            j["body"] = e.body;
            j["anchor"] = e.anchor;
            break;
    }
    return j;
}

SceneEvent event_from_json(const Json& j) {
    SceneEvent e;
    e.frame = j.at("frame").get<int>();
    e.kind = scene::event_kind_from_name(j.at("kind").get<std::string>());
    switch (e.kind) {
        case EventKind::release:
        case EventKind::vanish:
            e.body = j.at("body").get<int>();
            break;
        case EventKind::kinematic_move:
            e.body = j.at("body").get<int>();
            e.path = path_from_json(j.at("path"));
            break;
        case EventKind::appear:
            e.appear_body = body_from_json(j.at("appear_body"));
            break;
        case EventKind::teleport:
            e.body = j.at("body").get<int>();
            e.new_pose = pose_from_json(j.at("new_pose"));
            break;
        case EventKind::swap_positions:
            e.body = j.at("body").get<int>();
            e.body2 = j.at("body2").get<int>();
            break;
        case EventKind::recolor:
            e.body = j.at("body").get<int>();
            e.rgb = vec_from_json(j.at("rgb"));
            break;
        case EventKind::reshape:
            e.body = j.at("body").get<int>();
            e.new_shape = shape_from_json(j.at("new_shape"));
            break;
        case EventKind::phase_through:
            e.body = j.at("body").get<int>();
            e.anchor = j.at("anchor").get<bool>();
            break;
    }
    return e;
}

}  // namespace

Json script_to_json(const SceneScript& s) {
    Json j;
    j["n_frames"] = s.n_frames;
    j["dt"] = s.dt;
    Json bodies = Json::array();
    for (const auto& b : s.bodies) bodies.push_back(body_to_json(b));
    j["bodies"] = bodies;
    Json events = Json::array();
    for (const auto& e : s.events) events.push_back(event_to_json(e));
    j["events"] = events;
    Json cam;
    cam["eye"] = vec_to_json(s.camera.eye);
    cam["look_at"] = vec_to_json(s.camera.look_at);
    cam["vfov"] = s.camera.vfov;
    j["camera"] = cam;
    Json floor;
    floor["pattern"] = s.floor.pattern;
    floor["color_a"] = vec_to_json(s.floor.color_a);
    floor["color_b"] = vec_to_json(s.floor.color_b);
    j["floor"] = floor;
    return j;
}

SceneScript script_from_json(const Json& j) {
    SceneScript s;
    s.n_frames = j.at("n_frames").get<int>();
    s.dt = j.at("dt").get<double>();
    for (const auto& b : j.at("bodies")) s.bodies.push_back(body_from_json(b));
    for (const auto& e : j.at("events")) s.events.push_back(event_from_json(e));
    const Json& cam = j.at("camera");
    s.camera.eye = vec_from_json(cam.at("eye"));
    s.camera.look_at = vec_from_json(cam.at("look_at"));
    s.camera.vfov = cam.at("vfov").get<double>();
    const Json& floor = j.at("floor");
    s.floor.pattern = floor.at("pattern").get<int>();
    s.floor.color_a = vec_from_json(floor.at("color_a"));
    s.floor.color_b = vec_from_json(floor.at("color_b"));
    return s;
}

}  // namespace voe::io
