#pragma once

// Deterministic software rasterizer: z-buffered triangles, flat Lambert
// shading with one fixed directional light, procedural floor patterns.
// Identical state and camera produce bit-identical frames.

#include <cstdint>
#include <optional>
#include <vector>

#include "voe/scene.hpp"

namespace voe::render {

struct Camera {
    scene::Vec3 eye;
    scene::Vec3 look_at;
    double vfov = 0.95;        // vertical field of view, radians
    double near_plane = 0.05;  // camera-space z clip
};

Camera make_camera(const scene::CameraSpec& spec);

struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    std::size_t bytes() const { return rgb.size(); }
};

struct Projected {
    double px = 0.0;   // continuous pixel coordinates, x right
    double py = 0.0;   // y down
    double depth = 0.0;  // camera-space z
};

// Perspective projection; nullopt marks points behind the near plane.
std::optional<Projected> project(const scene::Vec3& point, const Camera& cam,
                                 int width, int height);

struct SceneBuffers {
    Frame frame;                 // filled only when shaded
    std::vector<int> body_id;    // front-most body per pixel, 0 = background/floor
    std::vector<double> depth;
};

// Single rasterization pass driving both rasterize() and
// visibility_buffer(), so the two always agree pixelwise.
// Depth tie-break: lower body id wins at exactly equal depth.
SceneBuffers render_scene(const scene::WorldState& state, const Camera& cam,
                          int width, int height, const scene::FloorSpec& floor,
                          bool shaded);

Frame rasterize(const scene::WorldState& state, const Camera& cam, int width,
                int height, const scene::FloorSpec& floor);

std::vector<int> visibility_buffer(const scene::WorldState& state,
                                   const Camera& cam, int width, int height);

// Procedural floor colour at world (x, z) for patterns 0..5.
scene::Vec3 floor_color(const scene::FloorSpec& floor, double x, double z);

inline constexpr int kFloorPatternCount = 6;

}  // namespace voe::render
