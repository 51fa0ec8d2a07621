#include "tailcal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tailcal {

std::vector<std::size_t> convex_hull_indices(std::span<const Vec2> pts) {
    const std::size_t n = pts.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
        if (pts[a].y != pts[b].y) return pts[a].y < pts[b].y;
        return a < b;
    });
    if (n <= 2) {
        if (n == 2 && pts[order[0]] == pts[order[1]]) order.pop_back();
        return order;
    }

    std::vector<std::size_t> hull(2 * n);
    std::size_t k = 0;
    // lower
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[order[i]]) <= 0.0) --k;
        hull[k++] = order[i];
    }
    // upper
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[order[i]]) <= 0.0) --k;
        hull[k++] = order[i];
    }
    hull.resize(k - 1);  // last point equals the first
    if (hull.size() == 2 && pts[hull[0]] == pts[hull[1]]) hull.pop_back();
    return hull;
}

std::vector<Vec2> convex_hull(std::span<const Vec2> pts) {
    std::vector<Vec2> out;
    for (std::size_t i : convex_hull_indices(pts)) out.push_back(pts[i]);
    return out;
}

double polygon_area(std::span<const Vec2> poly) {
    if (poly.size() < 3) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        s += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
    }
    return 0.5 * s;
}

namespace {

double dist_to_segment(Vec2 a, Vec2 b, Vec2 p) {
    const Vec2 ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = 0.0;
    if (len2 > 0.0) {
        t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
        t = std::clamp(t, 0.0, 1.0);
    }
    const Vec2 q = a + t * ab;
    return std::hypot(p.x - q.x, p.y - q.y);
}

}  // namespace

bool point_in_convex_polygon(std::span<const Vec2> poly, Vec2 p, double tol) {
    if (poly.empty()) return false;
    if (poly.size() == 1) return std::hypot(p.x - poly[0].x, p.y - poly[0].y) <= tol;
    if (poly.size() == 2) return dist_to_segment(poly[0], poly[1], p) <= tol;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2 a = poly[j];
        const Vec2 b = poly[i];
        const double c = cross(a, b, p);
        if (c < 0.0) {
            // rescale: admit points within `tol` distance of the edge
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            if (c < -tol * std::max(len, 1e-300)) return false;
        }
    }
    return true;
}

}  // namespace tailcal
