#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace covgnn {

struct Vec2 {
    double x{0};
    double y{0};
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

struct Rect {
    Vec2 lo;
    Vec2 hi;

    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
};

struct Disc {
    Vec2 center;
    double radius{0};

    bool contains(Vec2 p) const { return dist(p, center) <= radius; }
};

// Distance from point p to segment [a, b].
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    const double len2 = d.x * d.x + d.y * d.y;
    if (len2 == 0.0) return dist(p, a);
    double t = ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return dist(p, Vec2{a.x + t * d.x, a.y + t * d.y});
}

// Liang-Barsky clip: does segment [a, b] intersect the closed rectangle?
inline bool segment_intersects_rect(Vec2 a, Vec2 b, const Rect& r) {
    double t0 = 0.0, t1 = 1.0;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - r.lo.x, r.hi.x - a.x, a.y - r.lo.y, r.hi.y - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return false;
        } else {
            const double t = q[i] / p[i];
            if (p[i] < 0.0) {
                t0 = std::max(t0, t);
            } else {
                t1 = std::min(t1, t);
            }
            if (t0 > t1) return false;
        }
    }
    return true;
}

inline bool segment_intersects_disc(Vec2 a, Vec2 b, const Disc& d) {
    return point_segment_distance(d.center, a, b) <= d.radius;
}

// Axis-aligned mission area with rectangle and disc obstacles.
struct ObstacleMap {
    Rect bounds;
    std::vector<Rect> rects;
    std::vector<Disc> discs;

    bool point_blocked(Vec2 p) const {
        for (const auto& r : rects)
            if (r.contains(p)) return true;
        for (const auto& d : discs)
            if (d.contains(p)) return true;
        return false;
    }

    bool segment_blocked(Vec2 a, Vec2 b) const {
        for (const auto& r : rects)
            if (segment_intersects_rect(a, b, r)) return true;
        for (const auto& d : discs)
            if (segment_intersects_disc(a, b, d)) return true;
        return false;
    }

    void validate() const {
        if (!(bounds.hi.x > bounds.lo.x && bounds.hi.y > bounds.lo.y))
            throw std::invalid_argument("ObstacleMap: degenerate bounds");
        for (const auto& r : rects) {
            if (!(r.hi.x >= r.lo.x && r.hi.y >= r.lo.y))
                throw std::invalid_argument("ObstacleMap: degenerate rectangle obstacle");
            if (!bounds.contains(r.lo) || !bounds.contains(r.hi))
                throw std::invalid_argument("ObstacleMap: rectangle obstacle outside bounds");
        }
        for (const auto& d : discs) {
            if (d.radius < 0)
                throw std::invalid_argument("ObstacleMap: negative disc radius");
            if (!bounds.contains(d.center - Vec2{d.radius, d.radius}) ||
                !bounds.contains(d.center + Vec2{d.radius, d.radius}))
                throw std::invalid_argument("ObstacleMap: disc obstacle outside bounds");
        }
    }
};

}  // namespace covgnn
