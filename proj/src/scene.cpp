#include "voe/scene.hpp"

#include <algorithm>
#include <cmath>

namespace voe::scene {

double shape_height(const BodyShape& s) {
    switch (s.kind) {
        case ShapeKind::sphere: return 2.0 * s.radius;
        default: return s.extents.y;
    }
}

std::vector<std::pair<Vec3, Vec3>> shape_sub_boxes(const BodyShape& s) {
    if (s.kind == ShapeKind::sphere) {
        const double d = 2.0 * s.radius;
        return {{Vec3{}, Vec3{d, d, d}}};
    }
    if (s.kind != ShapeKind::open_container) return {{Vec3{}, s.extents}};

    // Four walls plus a base, all expressed relative to the body centre.
    const Vec3 e = s.extents;
    const double w = s.wall;
    std::vector<std::pair<Vec3, Vec3>> parts;
    const double hy = e.y / 2.0;
    // base
    parts.push_back({Vec3{0, -hy + w / 2.0, 0}, Vec3{e.x, w, e.z}});
    const double wall_h = e.y - w;
    const double wall_cy = -hy + w + wall_h / 2.0;
    // front (+z) and back (-z)
    parts.push_back({Vec3{0, wall_cy, e.z / 2.0 - w / 2.0}, Vec3{e.x, wall_h, w}});
    parts.push_back({Vec3{0, wall_cy, -e.z / 2.0 + w / 2.0}, Vec3{e.x, wall_h, w}});
    // left (-x) and right (+x), inset between front/back
    parts.push_back({Vec3{-e.x / 2.0 + w / 2.0, wall_cy, 0}, Vec3{w, wall_h, e.z - 2.0 * w}});
    parts.push_back({Vec3{e.x / 2.0 - w / 2.0, wall_cy, 0}, Vec3{w, wall_h, e.z - 2.0 * w}});
    return parts;
}

Aabb body_aabb(const Body& b) {
    Aabb box;
    if (b.shape.kind == ShapeKind::sphere) {
        const double r = b.shape.radius;
        box.include(b.pose.position - Vec3{r, r, r});
        box.include(b.pose.position + Vec3{r, r, r});
        return box;
    }
    for (const auto& [off, ext] : shape_sub_boxes(b.shape)) {
        for (int cx : {-1, 1})
            for (int cy : {-1, 1})
                for (int cz : {-1, 1}) {
                    Vec3 local = off + Vec3{cx * ext.x / 2.0, cy * ext.y / 2.0,
                                            cz * ext.z / 2.0};
                    box.include(b.pose.position +
                                rotate_about_axis(local, b.pose.axis, b.pose.angle));
                }
    }
    return box;
}

bool is_manipulation(EventKind k) {
    switch (k) {
        case EventKind::release:
        case EventKind::kinematic_move: return false;
        default: return true;
    }
}

std::string event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::release: return "release";
        case EventKind::kinematic_move: return "kinematic_move";
        case EventKind::vanish: return "vanish";
        case EventKind::appear: return "appear";
        case EventKind::teleport: return "teleport";
        case EventKind::swap_positions: return "swap_positions";
        case EventKind::recolor: return "recolor";
        case EventKind::reshape: return "reshape";
        case EventKind::phase_through: return "phase_through";
    }
    return "release";
}

EventKind event_kind_from_name(const std::string& s) {
    for (EventKind k :
         {EventKind::release, EventKind::kinematic_move, EventKind::vanish,
          EventKind::appear, EventKind::teleport, EventKind::swap_positions,
          EventKind::recolor, EventKind::reshape, EventKind::phase_through})
        if (event_kind_name(k) == s) return k;
    throw FormatError("unknown event kind: " + s);
}

double KinematicPath::hinge_angle_at(int frame) const {
    const double swept = rate * std::max(0, frame - start_frame);
    return std::max(angle_start - swept, angle_end);
}

Pose KinematicPath::pose_at(int frame) const {
    if (kind == Kind::linear) {
        double u = 0.0;
        if (frame >= end_frame) {
            u = 1.0;
        } else if (frame > start_frame && end_frame > start_frame) {
            u = static_cast<double>(frame - start_frame) / (end_frame - start_frame);
        }
        return Pose{from + (to - from) * u, move_axis, fixed_angle};
    }
    // Hinge: plank extends toward -z from the hinge edge, rotating about
    // the x-parallel edge; at angle a the tip sits at height L*sin(a).
    const double a = hinge_angle_at(frame);
    const Vec3 dir{0, std::sin(a), -std::cos(a)};          // along the plank
    const Vec3 up_n{0, std::cos(a), std::sin(a)};          // underside normal
    const Vec3 center = hinge_point + dir * (length / 2.0) + up_n * (thickness / 2.0);
    return Pose{center, Axis::X, a};
}

void SceneScript::validate() const {
    if (n_frames < 1) throw ContractError("SceneScript: n_frames must be >= 1");
    if (!(dt > 0.0)) throw ContractError("SceneScript: dt must be > 0");
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].frame < events[i - 1].frame)
            throw ContractError("SceneScript: events must be sorted by frame");
    for (const auto& e : events)
        if (e.frame < 0 || e.frame >= n_frames)
            throw ContractError("SceneScript: event frame outside video length");
}

const BodyState* WorldState::find(int id) const {
    for (const auto& b : bodies)
        if (b.body.id == id) return &b;
    return nullptr;
}

BodyState* WorldState::find(int id) {
    for (auto& b : bodies)
        if (b.body.id == id) return &b;
    return nullptr;
}

WorldState initial_state(const SceneScript& script) {
    WorldState st;
    st.frame = 0;
    st.bodies.reserve(script.bodies.size());
    for (const auto& b : script.bodies) st.bodies.push_back(BodyState{b});
    return st;
}

namespace {

// Highest support top crossed while the body fell from bottom_before to
// bottom_after this step. The floor (y = 0) always counts.
double crossed_support_height(const WorldState& st, const BodyState& self,
                              double bottom_before, double bottom_after) {
    double best = -1e30;
    auto consider = [&](double top) {
        if (top <= bottom_before + 1e-9 && top >= bottom_after - 1e-9)
            best = std::max(best, top);
    };
    consider(0.0);  // floor
    const Aabb self_box = body_aabb(self.body);
    for (const auto& o : st.bodies) {
        if (o.body.id == self.body.id || !o.visible || o.phased) continue;
        for (const auto& [off, ext] : shape_sub_boxes(o.body.shape)) {
            Body part = o.body;
            part.shape = BodyShape{ShapeKind::box, ext, 0.0, 0.0};
            part.pose.position =
                o.body.pose.position +
                rotate_about_axis(off, o.body.pose.axis, o.body.pose.angle);
            const Aabb pb = body_aabb(part);
            if (!pb.overlaps_xz(self_box, 1e-9)) continue;
            consider(pb.hi.y);
        }
    }
    return best;
}

double body_half_height(const BodyState& b) {
    const Aabb box = body_aabb(b.body);
    return (box.hi.y - box.lo.y) / 2.0;
}

}  // namespace

WorldState step(const WorldState& state, const SceneScript& script) {
    WorldState next = state;
    next.frame = state.frame + 1;
    const double dt = script.dt;

    // Vanished bodies keep integrating (their ground-truth pose advances,
    // e.g. a hidden rolling ball) but never support or render.
    for (auto& bs : next.bodies) {
        if (bs.phased) {
            if (bs.anchored) continue;  // frozen in place
            // Ballistic: gravity still applies, contacts and paths do not.
            if (bs.body.dynamic) {
                bs.body.velocity.y -= kGravity * dt;
                bs.body.pose.position += bs.body.velocity * dt;
            }
            continue;
        }
        if (bs.has_path) {
            bs.body.pose = bs.path.pose_at(next.frame);
            continue;
        }
        if (!bs.body.dynamic) continue;

        const double half_h = body_half_height(bs);
        const double bottom_before = bs.body.pose.position.y - half_h;
        bs.body.velocity.y -= kGravity * dt;
        bs.body.pose.position += bs.body.velocity * dt;
        const double bottom_after = bs.body.pose.position.y - half_h;

        const double support =
            crossed_support_height(state, bs, bottom_before, bottom_after);
        if (support > -1e29 && bottom_after < support) {
            bs.body.pose.position.y = support + half_h;
            if (bs.body.velocity.y < 0.0) bs.body.velocity.y = 0.0;
        }
        // Scripted scenes never leave residual penetration.
        if (support > -1e29 && bs.body.pose.position.y - half_h < support - 1e-6)
            throw Error("scene::step: interpenetration after contact resolution");
    }
    return next;
}

WorldState apply_event(const WorldState& state, const SceneEvent& event) {
    WorldState next = state;
    auto require = [&](int id) -> BodyState& {
        BodyState* b = next.find(id);
        if (!b)
            throw ContractError("apply_event: unknown body id " + std::to_string(id) +
                                " for event " + event_kind_name(event.kind));
        return *b;
    };

    switch (event.kind) {
        case EventKind::release:
            require(event.body).body.dynamic = true;
            break;
        case EventKind::kinematic_move: {
            BodyState& b = require(event.body);
            if (!b.phased) {
                b.has_path = true;
                b.path = event.path;
            }
            break;
        }
        case EventKind::vanish:
            require(event.body).visible = false;
            break;
        case EventKind::appear: {
            // Un-hides a vanished body (its state kept advancing), or adds
            // a brand-new one.
            if (BodyState* existing = next.find(event.appear_body.id)) {
                if (existing->visible)
                    throw ContractError("apply_event: appear target already visible");
                existing->visible = true;
                break;
            }
            BodyState bs{event.appear_body};
            bs.visible = true;
            next.bodies.push_back(bs);
            std::sort(next.bodies.begin(), next.bodies.end(),
                      [](const BodyState& a, const BodyState& b2) {
                          return a.body.id < b2.body.id;
                      });
            break;
        }
        case EventKind::teleport:
            require(event.body).body.pose = event.new_pose;
            break;
        case EventKind::swap_positions: {
            BodyState& a = require(event.body);
            BodyState& b = require(event.body2);
            std::swap(a.body.pose, b.body.pose);
            break;
        }
        case EventKind::recolor:
            require(event.body).body.color = event.rgb;
            break;
        case EventKind::reshape:
            require(event.body).body.shape = event.new_shape;
            break;
        case EventKind::phase_through: {
            BodyState& b = require(event.body);
            b.phased = true;
            b.anchored = event.anchor;
            b.has_path = false;
            if (event.anchor) b.body.velocity = Vec3{};
            break;
        }
    }
    return next;
}

std::vector<WorldState> simulate(const SceneScript& script) {
    script.validate();
    std::vector<WorldState> out;
    out.reserve(static_cast<std::size_t>(script.n_frames));

    WorldState st = initial_state(script);
    std::size_t next_event = 0;
    auto apply_frame_events = [&](WorldState s, int frame) {
        while (next_event < script.events.size() &&
               script.events[next_event].frame == frame) {
            s = apply_event(s, script.events[next_event]);
            ++next_event;
        }
        return s;
    };

    st = apply_frame_events(std::move(st), 0);
    out.push_back(st);
    for (int f = 1; f < script.n_frames; ++f) {
        st = apply_frame_events(std::move(st), f);
        st = step(st, script);
        st.frame = f;
        out.push_back(st);
    }
    return out;
}

KinematicPath plank_fall_path(const Vec3& hinge_point, double length,
                              double thickness, double start_angle,
                              const PlankEnd& end, int start_frame,
                              int frames_to_flat) {
    if (!(start_angle > 0.0))
        throw ParameterError("plank_fall_path: start angle must be positive");
    if (frames_to_flat < 1)
        throw ParameterError("plank_fall_path: frames_to_flat must be >= 1");

    double end_angle = 0.0;
    if (end.kind == PlankEnd::Kind::rests_on) {
        if (end.object_height > length)
            throw GenerationError(
                "plank_fall_path: object taller than plank length");
        end_angle = std::asin(end.object_height / length);
    }

    KinematicPath p;
    p.kind = KinematicPath::Kind::hinge;
    p.start_frame = start_frame;
    p.hinge_point = hinge_point;
    p.angle_start = start_angle;
    p.rate = start_angle / frames_to_flat;
    p.angle_end = end_angle;
    p.length = length;
    p.thickness = thickness;
    p.end_frame = start_frame +
                  static_cast<int>(std::ceil((start_angle - end_angle) / p.rate));
    return p;
}

}  // namespace voe::scene
