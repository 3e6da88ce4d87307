// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "dgk/common.hpp"

namespace dgk {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const noexcept { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const noexcept { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const noexcept { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) noexcept {
        x += o.x;
        y += o.y;
        return *this;
    }
    double dot(const Vec2& o) const noexcept { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const noexcept { return x * o.y - y * o.x; }
    double norm() const noexcept { return std::hypot(x, y); }
    double squared_norm() const noexcept { return x * x + y * y; }
    bool operator==(const Vec2&) const = default;
};

inline Vec2 operator*(double s, const Vec2& v) noexcept { return v * s; }

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) noexcept {
    constexpr double two_pi = 6.283185307179586476925286766559;
    double w = std::fmod(a + 3.14159265358979323846, two_pi);
    if (w <= 0.0) {
        w += two_pi;
    }
    return w - 3.14159265358979323846;
}

/// Rigid 2-D transform: the pose (origin, heading) of a local frame expressed
/// in the parent frame. `to_world` maps local coordinates out, `to_local`
/// maps parent coordinates in; they are exact inverses.
struct Frame2 {
    Vec2 origin{};
    double heading = 0.0;

    static Frame2 identity() noexcept { return {}; }

    Vec2 to_world(const Vec2& p) const noexcept {
        const double c = std::cos(heading);
        const double s = std::sin(heading);
        return {origin.x + c * p.x - s * p.y, origin.y + s * p.x + c * p.y};
    }

    Vec2 to_local(const Vec2& p) const noexcept {
        const double c = std::cos(heading);
        const double s = std::sin(heading);
        const Vec2 d = p - origin;
        return {c * d.x + s * d.y, -s * d.x + c * d.y};
    }

    /// Rotation only (velocities, accelerations).
    Vec2 rotate_to_world(const Vec2& v) const noexcept {
        const double c = std::cos(heading);
        const double s = std::sin(heading);
        return {c * v.x - s * v.y, s * v.x + c * v.y};
    }

    Vec2 rotate_to_local(const Vec2& v) const noexcept {
        const double c = std::cos(heading);
        const double s = std::sin(heading);
        return {c * v.x + s * v.y, -s * v.x + c * v.y};
    }
};

/// Closed simple polygon, vertices in order (either winding).
using Polygon = std::vector<Vec2>;

/// Point-in-polygon by crossing number. Boundary rule: points on an edge
/// (within `edge_eps`) count as inside.
inline bool point_in_polygon(const Vec2& p, const Polygon& poly, double edge_eps = 1e-9) {
    const std::size_t n = poly.size();
    if (n < 3) {
        return false;
    }
    // Boundary test first.
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        const Vec2 ab = b - a;
        const double len2 = ab.squared_norm();
        if (len2 == 0.0) {
            if ((p - a).norm() <= edge_eps) {
                return true;
            }
            continue;
        }
        double t = (p - a).dot(ab) / len2;
        t = std::fmin(1.0, std::fmax(0.0, t));
        const Vec2 closest = a + ab * t;
        if ((p - closest).norm() <= edge_eps) {
            return true;
        }
    }
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_int = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < x_int) {
                inside = !inside;
            }
        }
    }
    return inside;
}

/// Oriented rectangle footprint: center pose plus full length/width.
struct OrientedBox {
    Vec2 center{};
    double heading = 0.0;
    double length = 0.0;
    double width = 0.0;

    std::vector<Vec2> corners() const {
        const double c = std::cos(heading);
        const double s = std::sin(heading);
        const Vec2 fwd{c * length * 0.5, s * length * 0.5};
        const Vec2 left{-s * width * 0.5, c * width * 0.5};
        return {center + fwd + left, center + fwd - left, center - fwd - left,
                center - fwd + left};
    }
};

/// Separating-axis overlap test for two oriented rectangles.
/// Touching boxes (zero gap) count as overlapping.
inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const double axes[4][2] = {
        {std::cos(a.heading), std::sin(a.heading)},
        {-std::sin(a.heading), std::cos(a.heading)},
        {std::cos(b.heading), std::sin(b.heading)},
        {-std::sin(b.heading), std::cos(b.heading)},
    };
    for (const auto& axis : axes) {
        double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
        for (const auto& p : ca) {
            const double v = p.x * axis[0] + p.y * axis[1];
            amin = std::fmin(amin, v);
            amax = std::fmax(amax, v);
        }
        for (const auto& p : cb) {
            const double v = p.x * axis[0] + p.y * axis[1];
            bmin = std::fmin(bmin, v);
            bmax = std::fmax(bmax, v);
        }
        if (amax < bmin || bmax < amin) {
            return false;
        }
    }
    return true;
}

}  // namespace dgk
