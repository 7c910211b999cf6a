#pragma once

// Test-side oracles, implemented independently of the library internals:
// Minkowski-difference distance, half-plane-clipping rasterization, and a
// plain cell-graph Dijkstra.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "gridnav/collision.hpp"
#include "gridnav/grid.hpp"

namespace oracle {

using gridnav::Cell;
using gridnav::ConvexPolygon;
using gridnav::GridMap;
using gridnav::Vec2;

// Long-lived footprint library so polygon references stay valid.
inline const gridnav::FootprintLibrary& lib() {
    static const gridnav::FootprintLibrary l = gridnav::FootprintLibrary::builtin();
    return l;
}

inline double cross(Vec2 o, Vec2 a, Vec2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone-chain convex hull.
inline std::vector<Vec2> hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Vec2> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab{b.x - a.x, b.y - a.y};
    double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = len2 == 0.0
                   ? 0.0
                   : std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2,
                                0.0, 1.0);
    double dx = p.x - (a.x + t * ab.x), dy = p.y - (a.y + t * ab.y);
    return std::hypot(dx, dy);
}

inline bool point_in_convex(Vec2 p, const std::vector<Vec2>& poly) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
        Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
        if (cross(a, b, p) < 0) return false;  // CCW polygon
    }
    return true;
}

// Distance between two translated convex polygons via the Minkowski
// difference: d(A,B) = distance from the origin to hull(A + (-B)).
inline double minkowski_distance(const ConvexPolygon& a, Vec2 oa,
                                 const ConvexPolygon& b, Vec2 ob) {
    std::vector<Vec2> pts;
    for (Vec2 va : a.vertices())
        for (Vec2 vb : b.vertices())
            pts.push_back({va.x + oa.x - vb.x - ob.x, va.y + oa.y - vb.y - ob.y});
    std::vector<Vec2> h = hull(pts);
    if (h.size() >= 3 && point_in_convex({0, 0}, h)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < h.size(); ++i)
        best = std::min(best, point_segment_distance(
                                  {0, 0}, h[i], h[(i + 1) % h.size()]));
    return best;
}

// Sutherland-Hodgman clip of a polygon against an axis-aligned half-plane
// keep-side (axis 0: x, axis 1: y; sign +1 keeps <= bound).
inline std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, int axis,
                                        double bound, int sign) {
    auto coord = [&](Vec2 p) { return axis == 0 ? p.x : p.y; };
    auto inside = [&](Vec2 p) {
        return sign > 0 ? coord(p) <= bound : coord(p) >= bound;
    };
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        Vec2 cur = poly[i], nxt = poly[(i + 1) % poly.size()];
        bool cin = inside(cur), nin = inside(nxt);
        if (cin) out.push_back(cur);
        if (cin != nin) {
            double t = (bound - coord(cur)) / (coord(nxt) - coord(cur));
            out.push_back({cur.x + t * (nxt.x - cur.x),
                           cur.y + t * (nxt.y - cur.y)});
        }
    }
    return out;
}

// Closed-set polygon/cell-square intersection by clipping: non-empty
// remainder (even degenerate) means the square is covered.
inline bool square_touched(const ConvexPolygon& poly, Vec2 offset, Cell cell) {
    std::vector<Vec2> p;
    for (Vec2 v : poly.vertices()) p.push_back({v.x + offset.x, v.y + offset.y});
    p = clip_halfplane(p, 0, cell.col + 1.0, +1);
    if (p.empty()) return false;
    p = clip_halfplane(p, 0, cell.col + 0.0, -1);
    if (p.empty()) return false;
    p = clip_halfplane(p, 1, cell.row + 1.0, +1);
    if (p.empty()) return false;
    p = clip_halfplane(p, 1, cell.row + 0.0, -1);
    return !p.empty();
}

// Brute-force rasterization over a bounding window.
inline std::vector<Cell> rasterize(const ConvexPolygon& poly, Vec2 offset,
                                   int height, int width) {
    std::vector<Cell> out;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            if (square_touched(poly, offset, {r, c})) out.push_back({r, c});
    return out;
}

// Plain Dijkstra over free placements, 4-connected unit edges.
inline double dijkstra_length(const GridMap& map, const ConvexPolygon& model,
                              Cell start, Cell goal, double d) {
    const double inf = std::numeric_limits<double>::infinity();
    auto free_at = [&](Cell c) {
        return !gridnav::check_static_collision(model, gridnav::cell_center(c),
                                                map, d);
    };
    if (!free_at(start) || !free_at(goal)) return inf;
    std::vector<double> dist(map.cell_count(), inf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[map.index(start)] = 0.0;
    pq.push({0.0, map.index(start)});
    const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
    while (!pq.empty()) {
        auto [cur, idx] = pq.top();
        pq.pop();
        if (cur > dist[idx]) continue;
        Cell c = map.cell(idx);
        if (c == goal) return cur;
        for (int k = 0; k < 4; ++k) {
            Cell n{c.row + dr[k], c.col + dc[k]};
            if (!map.in_bounds(n) || !free_at(n)) continue;
            double nd = cur + 1.0;
            if (nd < dist[map.index(n)]) {
                dist[map.index(n)] = nd;
                pq.push({nd, map.index(n)});
            }
        }
    }
    return inf;
}

// Random convex polygon: hull of points in a box around the origin.
inline ConvexPolygon random_polygon(std::mt19937_64& rng, double extent) {
    std::uniform_real_distribution<double> coord(-extent, extent);
    std::uniform_int_distribution<int> count(4, 9);
    for (;;) {
        std::vector<Vec2> pts;
        int n = count(rng);
        for (int i = 0; i < n; ++i) pts.push_back({coord(rng), coord(rng)});
        std::vector<Vec2> h = hull(pts);
        if (h.size() < 3) continue;
        try {
            return ConvexPolygon::from_vertices(h);
        } catch (const std::exception&) {
            continue;  // nearly-collinear hull rejected as non-strict
        }
    }
}

inline GridMap random_map(std::mt19937_64& rng, int rows, int cols,
                          double obstacle_rate) {
    std::bernoulli_distribution block(obstacle_rate);
    std::vector<uint8_t> cells(static_cast<std::size_t>(rows) * cols, 0);
    for (auto& b : cells) b = block(rng) ? 1 : 0;
    return GridMap(rows, cols, std::move(cells));
}

}  // namespace oracle
