#pragma once

// Minimal 3-d vector / rotation helpers shared by the scene engine and
// the rasterizer. Scene convention: y is up, gravity is -y, cameras look
// from +z toward the origin.

#include <array>
#include <cmath>

namespace voe::scene {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

enum class Axis { X, Y, Z };

// Rotation of v about the given axis through the origin.
inline Vec3 rotate_about_axis(const Vec3& v, Axis axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    switch (axis) {
        case Axis::X: return {v.x, c * v.y - s * v.z, s * v.y + c * v.z};
        case Axis::Y: return {c * v.x + s * v.z, v.y, -s * v.x + c * v.z};
        case Axis::Z: return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
    }
    return v;
}

struct Aabb {
    Vec3 lo{1e30, 1e30, 1e30};
    Vec3 hi{-1e30, -1e30, -1e30};

    void include(const Vec3& p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }

    bool overlaps_xz(const Aabb& o, double margin = 0.0) const {
        return lo.x < o.hi.x - margin && hi.x > o.lo.x + margin &&
               lo.z < o.hi.z - margin && hi.z > o.lo.z + margin;
    }
};

}  // namespace voe::scene
