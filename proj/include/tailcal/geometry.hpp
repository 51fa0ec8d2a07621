#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tailcal {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

inline double cross(Vec2 o, Vec2 a, Vec2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Convex hull via monotone chain; returns indices into `pts` in CCW order.
// Collinear inputs yield a 2-point (or 1-point) "hull".
std::vector<std::size_t> convex_hull_indices(std::span<const Vec2> pts);

std::vector<Vec2> convex_hull(std::span<const Vec2> pts);

// Signed area of a CCW polygon (0 for fewer than 3 vertices).
double polygon_area(std::span<const Vec2> poly);

// Closed-region membership: boundary counts as inside. `tol` is an absolute
// slack on the cross-product test; pass a scale-appropriate value.
bool point_in_convex_polygon(std::span<const Vec2> poly, Vec2 p, double tol = 1e-9);

}  // namespace tailcal
