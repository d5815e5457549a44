#pragma once

// Scripted rigid-scene engine. Probe scenes only need gravity, resting
// contact and analytically scripted kinematics (plank rotation, screen
// lifts, rod translations); manipulations are events, not physics.

#include <optional>
#include <string>
#include <vector>

#include "voe/common.hpp"
#include "voe/geometry.hpp"

namespace voe::scene {

inline constexpr double kGravity = 9.8;  // scene units / s^2, downward

struct Pose {
    Vec3 position;
    Axis axis = Axis::Y;
    double angle = 0.0;

    bool operator==(const Pose& o) const {
        return position == o.position && axis == o.axis && angle == o.angle;
    }
};

enum class ShapeKind { box, sphere, open_container, plank, pillar, screen, rod };

// plank/pillar/screen/rod are semantically tagged boxes; open_container
// decomposes into four walls plus a base so the renderer and supports
// never special-case it.
struct BodyShape {
    ShapeKind kind = ShapeKind::box;
    Vec3 extents{0.1, 0.1, 0.1};  // full sizes for box-likes / outer for container
    double radius = 0.1;          // sphere
    double wall = 0.05;           // open_container wall/base thickness

    bool operator==(const BodyShape& o) const {
        return kind == o.kind && extents == o.extents && radius == o.radius &&
               wall == o.wall;
    }
};

// Full height of the shape when upright; used for propping geometry.
double shape_height(const BodyShape& s);

struct Body {
    int id = 0;
    BodyShape shape;
    Pose pose;
    Vec3 velocity;
    double angular_velocity = 0.0;
    Vec3 color{0.5, 0.5, 0.5};
    bool dynamic = false;
};

// Pose as an analytic function of the frame index. Clamped to the end
// value past end_frame, so a body simply stays where a path leaves it.
struct KinematicPath {
    enum class Kind { linear, hinge };
    Kind kind = Kind::linear;
    int start_frame = 0;
    int end_frame = 0;

    // linear
    Vec3 from, to;
    Axis move_axis = Axis::Y;   // orientation kept fixed on linear paths
    double fixed_angle = 0.0;

    // hinge: rotation about an x-parallel edge on the floor; the plank
    // extends toward -z and falls toward -z. Constant angular rate.
    Vec3 hinge_point;
    double angle_start = 0.0;
    double rate = 0.0;        // radians per frame, >= 0
    double angle_end = 0.0;   // rotation stops here
    double length = 1.0;      // plank length (world z extent when flat)
    double thickness = 0.05;

    Pose pose_at(int frame) const;
    double hinge_angle_at(int frame) const;
};

enum class EventKind {
    release,
    kinematic_move,
    vanish,
    appear,
    teleport,
    swap_positions,
    recolor,
    reshape,
    phase_through
};

// Everything except release/kinematic_move makes a scene physically
// implausible; the oracle strips exactly these kinds.
bool is_manipulation(EventKind k);
std::string event_kind_name(EventKind k);
EventKind event_kind_from_name(const std::string& s);

struct SceneEvent {
    int frame = 0;
    EventKind kind = EventKind::release;
    int body = -1;
    int body2 = -1;        // swap_positions
    Pose new_pose;         // teleport
    Vec3 rgb;              // recolor
    BodyShape new_shape;   // reshape
    KinematicPath path;    // kinematic_move
    Body appear_body;      // appear
    // phase_through: anchored bodies freeze in place; unanchored ones
    // keep gravity but ignore all contacts and kinematic paths.
    bool anchor = false;
};

struct FloorSpec {
    int pattern = 0;  // 0..5, see render::floor_color
    Vec3 color_a{0.55, 0.55, 0.55};
    Vec3 color_b{0.35, 0.35, 0.35};
};

struct CameraSpec {
    Vec3 eye{0, 1.5, 3.5};
    Vec3 look_at{0, 0.3, 0};
    double vfov = 0.95;  // radians, vertical
};

struct SceneScript {
    std::vector<Body> bodies;
    std::vector<SceneEvent> events;  // sorted by frame
    CameraSpec camera;
    FloorSpec floor;
    int n_frames = 15;
    double dt = 0.2;

    void validate() const;
};

struct BodyState {
    Body body;
    bool visible = true;
    bool phased = false;
    bool anchored = false;
    bool has_path = false;
    KinematicPath path;
};

struct WorldState {
    int frame = 0;
    std::vector<BodyState> bodies;

    const BodyState* find(int id) const;
    BodyState* find(int id);
};

// World-space axis-aligned bounds of a body (container = union of parts).
Aabb body_aabb(const Body& b);

// Sub-boxes of a shape in local coordinates: (center offset, extents).
std::vector<std::pair<Vec3, Vec3>> shape_sub_boxes(const BodyShape& s);

WorldState initial_state(const SceneScript& script);

// Semi-implicit Euler for dynamic bodies plus resting-contact clamping;
// kinematic paths are evaluated analytically at the new frame.
WorldState step(const WorldState& state, const SceneScript& script);

// Applies exactly the named mutation; everything else is bit-identical.
WorldState apply_event(const WorldState& state, const SceneEvent& event);

// n_frames states; events are applied at their frame before that frame's
// integration. Byte-deterministic in the script.
std::vector<WorldState> simulate(const SceneScript& script);

// Constant-rate hinge fall for a plank of the given size. The rate is
// start_angle / frames_to_flat; rests_on stops at asin(h/L) along the
// same sweep, flat_on_floor continues to 0.
struct PlankEnd {
    enum class Kind { flat_on_floor, rests_on };
    Kind kind = Kind::flat_on_floor;
    double object_height = 0.0;
};
KinematicPath plank_fall_path(const Vec3& hinge_point, double length,
                              double thickness, double start_angle,
                              const PlankEnd& end, int start_frame,
                              int frames_to_flat);

}  // namespace voe::scene
