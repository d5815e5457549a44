#include "voe/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace voe::render {

using scene::Axis;
using scene::Body;
using scene::BodyState;
using scene::ShapeKind;
using scene::Vec3;

namespace {

// Fixed directional light and background; recorded in video metadata.
const Vec3 kLightDir = Vec3{-1.0, -2.0, -1.0}.normalized();
const Vec3 kBackground{0.62, 0.70, 0.80};
constexpr double kAmbient = 0.35;
constexpr double kFloorHalfExtent = 14.0;

struct Basis {
    Vec3 right, up, fwd;
};

Basis camera_basis(const Camera& cam) {
    const Vec3 fwd = (cam.look_at - cam.eye).normalized();
    Vec3 world_up{0, 1, 0};
    Vec3 right = fwd.cross(world_up);
    if (right.norm() < 1e-12) right = Vec3{1, 0, 0};  // looking straight down
    right = right.normalized();
    const Vec3 up = right.cross(fwd);
    return {right, up, fwd};
}

struct Tri {
    Vec3 a, b, c;   // world space
    Vec3 normal;    // world space, used for flat shading
};

void add_box(std::vector<Tri>& out, const Vec3& center, const Vec3& extents,
             Axis axis, double angle) {
    const Vec3 h{extents.x / 2.0, extents.y / 2.0, extents.z / 2.0};
    auto corner = [&](int sx, int sy, int sz) {
        const Vec3 local{sx * h.x, sy * h.y, sz * h.z};
        return center + rotate_about_axis(local, axis, angle);
    };
    // 8 corners indexed by sign bits (x, y, z).
    Vec3 v[8];
    for (int i = 0; i < 8; ++i)
        v[i] = corner((i & 1) ? 1 : -1, (i & 2) ? 1 : -1, (i & 4) ? 1 : -1);
    // Faces as corner index quads with outward normals.
    struct Face {
        int i0, i1, i2, i3;
        Vec3 n;
    };
    const Face faces[6] = {
        {1, 3, 7, 5, rotate_about_axis({1, 0, 0}, axis, angle)},    // +x
        {0, 4, 6, 2, rotate_about_axis({-1, 0, 0}, axis, angle)},   // -x
        {2, 6, 7, 3, rotate_about_axis({0, 1, 0}, axis, angle)},    // +y
        {0, 1, 5, 4, rotate_about_axis({0, -1, 0}, axis, angle)},   // -y
        {4, 5, 7, 6, rotate_about_axis({0, 0, 1}, axis, angle)},    // +z
        {0, 2, 3, 1, rotate_about_axis({0, 0, -1}, axis, angle)},   // -z
    };
    for (const auto& f : faces) {
        out.push_back({v[f.i0], v[f.i1], v[f.i2], f.n});
        out.push_back({v[f.i0], v[f.i2], v[f.i3], f.n});
    }
}

// Unit icosphere at two subdivisions (320 faces), built once.
const std::vector<Tri>& unit_icosphere() {
    static const std::vector<Tri> mesh = [] {
        const double t = (1.0 + std::sqrt(5.0)) / 2.0;
        std::vector<Vec3> verts = {
            {-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
            {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
            {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
        for (auto& v : verts) v = v.normalized();
        std::vector<std::array<int, 3>> faces = {
            {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
            {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
            {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
            {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<std::array<int, 3>> next;
            for (const auto& f : faces) {
                const int i0 = f[0], i1 = f[1], i2 = f[2];
                auto midpoint = [&](int a, int b) {
                    verts.push_back(((verts[static_cast<std::size_t>(a)] +
                                      verts[static_cast<std::size_t>(b)]) * 0.5)
                                        .normalized());
                    return static_cast<int>(verts.size()) - 1;
                };
                const int m01 = midpoint(i0, i1);
                const int m12 = midpoint(i1, i2);
                const int m20 = midpoint(i2, i0);
                next.push_back({i0, m01, m20});
                next.push_back({i1, m12, m01});
                next.push_back({i2, m20, m12});
                next.push_back({m01, m12, m20});
            }
            faces = std::move(next);
        }
        std::vector<Tri> tris;
        tris.reserve(faces.size());
        for (const auto& f : faces) {
            const Vec3 a = verts[static_cast<std::size_t>(f[0])];
            const Vec3 b = verts[static_cast<std::size_t>(f[1])];
            const Vec3 c = verts[static_cast<std::size_t>(f[2])];
            tris.push_back({a, b, c, ((a + b + c) * (1.0 / 3.0)).normalized()});
        }
        return tris;
    }();
    return mesh;
}

void body_triangles(const Body& b, std::vector<Tri>& out) {
    if (b.shape.kind == ShapeKind::sphere) {
        for (const Tri& t : unit_icosphere()) {
            const double r = b.shape.radius;
            Tri w;
            w.a = b.pose.position + rotate_about_axis(t.a * r, b.pose.axis, b.pose.angle);
            w.b = b.pose.position + rotate_about_axis(t.b * r, b.pose.axis, b.pose.angle);
            w.c = b.pose.position + rotate_about_axis(t.c * r, b.pose.axis, b.pose.angle);
            w.normal = rotate_about_axis(t.normal, b.pose.axis, b.pose.angle);
            out.push_back(w);
        }
        return;
    }
    for (const auto& [off, ext] : scene::shape_sub_boxes(b.shape)) {
        const Vec3 center =
            b.pose.position + rotate_about_axis(off, b.pose.axis, b.pose.angle);
        add_box(out, center, ext, b.pose.axis, b.pose.angle);
    }
}

double shade_intensity(const Vec3& normal) {
    const double lambert = std::max(0.0, normal.dot(-kLightDir));
    return std::min(1.0, kAmbient + 0.65 * lambert);
}

// Round half away from zero, clamped to a byte.
std::uint8_t quantize(double v) {
    const double scaled = v * 255.0;
    const double rounded = std::floor(scaled + 0.5);
    return static_cast<std::uint8_t>(std::clamp(rounded, 0.0, 255.0));
}

struct CamVert {
    Vec3 c;  // camera-space; z is depth along forward
};

struct RasterCtx {
    int width, height;
    double tan_half;
    double aspect;
    const Camera* cam;
    Basis basis;
    std::vector<double>* depth;
    std::vector<int>* ids;
    std::vector<std::uint8_t>* rgb;  // null for visibility-only passes
};

Vec3 to_camera(const RasterCtx& ctx, const Vec3& p) {
    const Vec3 d = p - ctx.cam->eye;
    return {d.dot(ctx.basis.right), d.dot(ctx.basis.up), d.dot(ctx.basis.fwd)};
}

// Continuous pixel coordinates of a camera-space point (z > 0).
void to_pixel(const RasterCtx& ctx, const Vec3& c, double& px, double& py) {
    const double ndc_x = c.x / (c.z * ctx.tan_half * ctx.aspect);
    const double ndc_y = c.y / (c.z * ctx.tan_half);
    px = (ndc_x + 1.0) / 2.0 * ctx.width;
    py = (1.0 - ndc_y) / 2.0 * ctx.height;
}

// Rasterizes one camera-space triangle with perspective-correct depth.
void raster_triangle(RasterCtx& ctx, const Vec3& c0, const Vec3& c1, const Vec3& c2,
                     int body_id, const std::uint8_t* color3, bool is_floor,
                     const scene::FloorSpec* floor, double intensity) {
    double x0, y0, x1, y1, x2, y2;
    to_pixel(ctx, c0, x0, y0);
    to_pixel(ctx, c1, x1, y1);
    to_pixel(ctx, c2, x2, y2);

    const double area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    if (area == 0.0) return;

    const int min_x = std::max(0, static_cast<int>(std::floor(std::min({x0, x1, x2}))));
    const int max_x = std::min(ctx.width - 1,
                               static_cast<int>(std::ceil(std::max({x0, x1, x2}))));
    const int min_y = std::max(0, static_cast<int>(std::floor(std::min({y0, y1, y2}))));
    const int max_y = std::min(ctx.height - 1,
                               static_cast<int>(std::ceil(std::max({y0, y1, y2}))));
    if (min_x > max_x || min_y > max_y) return;

    const double inv_z0 = 1.0 / c0.z, inv_z1 = 1.0 / c1.z, inv_z2 = 1.0 / c2.z;

    for (int py = min_y; py <= max_y; ++py) {
        const double sy = py + 0.5;
        for (int px = min_x; px <= max_x; ++px) {
            const double sx = px + 0.5;
            double w0 = (x1 - x0) * (sy - y0) - (sx - x0) * (y1 - y0);
            double w1 = (x2 - x1) * (sy - y1) - (sx - x1) * (y2 - y1);
            double w2 = (x0 - x2) * (sy - y2) - (sx - x2) * (y0 - y2);
            if (area < 0.0) {
                w0 = -w0;
                w1 = -w1;
                w2 = -w2;
            }
            if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
            const double wsum = w0 + w1 + w2;
            if (wsum == 0.0) continue;
            // Barycentric weights: w1 belongs to vertex 0 etc. by the
            // edge opposite convention; normalize explicitly.
            const double b0 = w1 / wsum, b1 = w2 / wsum, b2 = w0 / wsum;
            const double inv_z = b0 * inv_z0 + b1 * inv_z1 + b2 * inv_z2;
            const double z = 1.0 / inv_z;
            const std::size_t idx =
                static_cast<std::size_t>(py) * ctx.width + px;
            const double zb = (*ctx.depth)[idx];
            const int idb = (*ctx.ids)[idx];
            if (!(z < zb || (z == zb && body_id < idb))) continue;
            (*ctx.depth)[idx] = z;
            (*ctx.ids)[idx] = body_id;
            if (!ctx.rgb) continue;
            std::uint8_t* out = ctx.rgb->data() + idx * 3;
            if (is_floor) {
                // Exact world point: intersect the pixel-centre ray with
                // the y = 0 plane instead of interpolating attributes.
                const double ndc_x = 2.0 * (sx / ctx.width) - 1.0;
                const double ndc_y = 1.0 - 2.0 * (sy / ctx.height);
                const Vec3 dir = ctx.basis.right * (ndc_x * ctx.tan_half * ctx.aspect) +
                                 ctx.basis.up * (ndc_y * ctx.tan_half) + ctx.basis.fwd;
                Vec3 world = ctx.cam->eye;
                if (std::fabs(dir.y) > 1e-12)
                    world = ctx.cam->eye + dir * (-ctx.cam->eye.y / dir.y);
                const Vec3 col = floor_color(*floor, world.x, world.z);
                out[0] = quantize(col.x * intensity);
                out[1] = quantize(col.y * intensity);
                out[2] = quantize(col.z * intensity);
            } else {
                out[0] = color3[0];
                out[1] = color3[1];
                out[2] = color3[2];
            }
        }
    }
}

// Clips a camera-space triangle against z >= near and rasterizes the
// resulting polygon as a fan.
void clip_and_raster(RasterCtx& ctx, const Tri& tri, int body_id,
                     const std::uint8_t* color3, bool is_floor,
                     const scene::FloorSpec* floor, double intensity) {
    const Vec3 cs[3] = {to_camera(ctx, tri.a), to_camera(ctx, tri.b),
                        to_camera(ctx, tri.c)};
    const double zn = ctx.cam->near_plane;
    Vec3 poly[4];
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        const Vec3& cur = cs[i];
        const Vec3& prv = cs[(i + 2) % 3];
        const bool cur_in = cur.z >= zn;
        const bool prv_in = prv.z >= zn;
        if (cur_in != prv_in) {
            const double t = (zn - prv.z) / (cur.z - prv.z);
            poly[n++] = prv + (cur - prv) * t;
        }
        if (cur_in) poly[n++] = cur;
    }
    for (int i = 2; i < n; ++i)
        raster_triangle(ctx, poly[0], poly[i - 1], poly[i], body_id, color3,
                        is_floor, floor, intensity);
}

}  // namespace

Camera make_camera(const scene::CameraSpec& spec) {
    Camera c;
    c.eye = spec.eye;
    c.look_at = spec.look_at;
    c.vfov = spec.vfov;
    return c;
}

std::optional<Projected> project(const scene::Vec3& point, const Camera& cam,
                                 int width, int height) {
    if (!(cam.vfov > 0.0 && cam.vfov < 3.141592653589793))
        throw ParameterError("project: fov must be in (0, pi)");
    const Basis basis = camera_basis(cam);
    const Vec3 d = point - cam.eye;
    const Vec3 c{d.dot(basis.right), d.dot(basis.up), d.dot(basis.fwd)};
    if (c.z < cam.near_plane) return std::nullopt;
    const double tan_half = std::tan(cam.vfov / 2.0);
    const double aspect = static_cast<double>(width) / height;
    Projected p;
    p.px = (c.x / (c.z * tan_half * aspect) + 1.0) / 2.0 * width;
    p.py = (1.0 - c.y / (c.z * tan_half)) / 2.0 * height;
    p.depth = c.z;
    return p;
}

scene::Vec3 floor_color(const scene::FloorSpec& floor, double x, double z) {
    auto checker = [&](double scale) {
        const long long ix = static_cast<long long>(std::floor(x / scale));
        const long long iz = static_cast<long long>(std::floor(z / scale));
        return ((ix + iz) & 1) == 0 ? floor.color_a : floor.color_b;
    };
    switch (floor.pattern) {
        case 0: return floor.color_a;
        case 1: return checker(1.0);
        case 2: return checker(0.5);
        case 3: {
            const long long ix = static_cast<long long>(std::floor(x / 0.8));
            return (ix & 1) == 0 ? floor.color_a : floor.color_b;
        }
        case 4: {
            const long long iz = static_cast<long long>(std::floor(z / 0.8));
            return (iz & 1) == 0 ? floor.color_a : floor.color_b;
        }
        case 5: {
            const long long d = static_cast<long long>(std::floor((x + z) / 1.2));
            return (d & 1) == 0 ? floor.color_a : floor.color_b;
        }
        default:
            throw ParameterError("floor_color: pattern id out of range");
    }
}

SceneBuffers render_scene(const scene::WorldState& state, const Camera& cam,
                          int width, int height, const scene::FloorSpec& floor,
                          bool shaded) {
    SceneBuffers out;
    out.depth.assign(static_cast<std::size_t>(width) * height, 1e30);
    out.body_id.assign(static_cast<std::size_t>(width) * height, 0);
    if (shaded) {
        out.frame.width = width;
        out.frame.height = height;
        out.frame.rgb.assign(static_cast<std::size_t>(width) * height * 3, 0);
        std::uint8_t bg[3] = {quantize(kBackground.x), quantize(kBackground.y),
                              quantize(kBackground.z)};
        for (std::size_t i = 0; i < out.depth.size(); ++i) {
            out.frame.rgb[i * 3 + 0] = bg[0];
            out.frame.rgb[i * 3 + 1] = bg[1];
            out.frame.rgb[i * 3 + 2] = bg[2];
        }
    }

    RasterCtx ctx;
    ctx.width = width;
    ctx.height = height;
    ctx.tan_half = std::tan(cam.vfov / 2.0);
    ctx.aspect = static_cast<double>(width) / height;
    ctx.cam = &cam;
    ctx.basis = camera_basis(cam);
    ctx.depth = &out.depth;
    ctx.ids = &out.body_id;
    ctx.rgb = shaded ? &out.frame.rgb : nullptr;

    // Floor: two large triangles at y = 0, body id 0, per-pixel pattern.
    {
        const double e = kFloorHalfExtent;
        const Tri f1{{-e, 0, -e}, {-e, 0, e}, {e, 0, e}, {0, 1, 0}};
        const Tri f2{{-e, 0, -e}, {e, 0, e}, {e, 0, -e}, {0, 1, 0}};
        const double intensity = shade_intensity({0, 1, 0});
        clip_and_raster(ctx, f1, 0, nullptr, true, &floor, intensity);
        clip_and_raster(ctx, f2, 0, nullptr, true, &floor, intensity);
    }

    std::vector<Tri> tris;
    for (const auto& bs : state.bodies) {
        if (!bs.visible) continue;
        tris.clear();
        body_triangles(bs.body, tris);
        for (const Tri& t : tris) {
            std::uint8_t col[3] = {0, 0, 0};
            double intensity = 1.0;
            if (shaded) {
                intensity = shade_intensity(t.normal);
                col[0] = quantize(bs.body.color.x * intensity);
                col[1] = quantize(bs.body.color.y * intensity);
                col[2] = quantize(bs.body.color.z * intensity);
            }
            clip_and_raster(ctx, t, bs.body.id, col, false, &floor, intensity);
        }
    }
    return out;
}

Frame rasterize(const scene::WorldState& state, const Camera& cam, int width,
                int height, const scene::FloorSpec& floor) {
    return render_scene(state, cam, width, height, floor, true).frame;
}

std::vector<int> visibility_buffer(const scene::WorldState& state,
                                   const Camera& cam, int width, int height) {
    scene::FloorSpec floor;  // geometry only; colours unused unshaded
    return render_scene(state, cam, width, height, floor, false).body_id;
}

}  // namespace voe::render
