#include "gridnav/geometry.hpp"

#include <algorithm>
#include <limits>

namespace gridnav {

namespace {

constexpr double kEps = 1e-12;

int orientation_sign(Vec2 a, Vec2 b, Vec2 c) {
    double v = cross(b - a, c - a);
    if (v > kEps) return 1;
    if (v < -kEps) return -1;
    return 0;
}

bool segments_intersect(const Segment& s, const Segment& t) {
    int d1 = orientation_sign(s.a, s.b, t.a);
    int d2 = orientation_sign(s.a, s.b, t.b);
    int d3 = orientation_sign(t.a, t.b, s.a);
    int d4 = orientation_sign(t.a, t.b, s.b);
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;

    auto on_segment = [](const Segment& seg, Vec2 p) {
        if (orientation_sign(seg.a, seg.b, p) != 0) return false;
        return std::min(seg.a.x, seg.b.x) - kEps <= p.x &&
               p.x <= std::max(seg.a.x, seg.b.x) + kEps &&
               std::min(seg.a.y, seg.b.y) - kEps <= p.y &&
               p.y <= std::max(seg.a.y, seg.b.y) + kEps;
    };
    return on_segment(s, t.a) || on_segment(s, t.b) ||
           on_segment(t, s.a) || on_segment(t, s.b);
}

}  // namespace

double point_segment_distance(Vec2 p, const Segment& s) {
    Vec2 d = s.b - s.a;
    double len2 = dot(d, d);
    if (len2 <= kEps) return norm(p - s.a);
    double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
    return norm(p - (s.a + t * d));
}

double min_segment_distance(const Segment& s, const Segment& t) {
    if (segments_intersect(s, t)) return 0.0;
    return std::min({point_segment_distance(t.a, s), point_segment_distance(t.b, s),
                     point_segment_distance(s.a, t), point_segment_distance(s.b, t)});
}

ConvexPolygon ConvexPolygon::from_vertices(std::vector<Vec2> vertices) {
    if (vertices.size() < 3)
        throw std::invalid_argument("polygon needs at least 3 vertices");

    double area2 = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        Vec2 a = vertices[i];
        Vec2 b = vertices[(i + 1) % vertices.size()];
        area2 += cross(a, b);
    }
    if (std::abs(area2) <= kEps)
        throw std::invalid_argument("degenerate polygon");
    if (area2 < 0.0)  // normalize to counter-clockwise
        std::reverse(vertices.begin(), vertices.end());

    for (std::size_t i = 0; i < vertices.size(); ++i) {
        Vec2 a = vertices[i];
        Vec2 b = vertices[(i + 1) % vertices.size()];
        Vec2 c = vertices[(i + 2) % vertices.size()];
        if (cross(b - a, c - b) <= kEps)
            throw std::invalid_argument("polygon is not strictly convex");
    }

    ConvexPolygon poly;
    poly.vertices_ = std::move(vertices);
    return poly;
}

bool ConvexPolygon::contains(Vec2 p, Vec2 offset) const {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        Vec2 a = vertices_[i] + offset;
        Vec2 b = vertices_[(i + 1) % vertices_.size()] + offset;
        if (cross(b - a, p - a) < -kEps) return false;
    }
    return true;
}

std::vector<Segment> ConvexPolygon::outline(Vec2 offset) const {
    std::vector<Segment> segs;
    segs.reserve(vertices_.size());
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        segs.push_back({vertices_[i] + offset,
                        vertices_[(i + 1) % vertices_.size()] + offset});
    return segs;
}

void ConvexPolygon::bounds(Vec2 offset, Vec2& lo, Vec2& hi) const {
    lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    hi = {-lo.x, -lo.y};
    for (Vec2 v : vertices_) {
        Vec2 p = v + offset;
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
}

double ConvexPolygon::radius() const {
    double r = 0.0;
    for (Vec2 v : vertices_) r = std::max(r, norm(v));
    return r;
}

bool polygons_intersect(const ConvexPolygon& a, Vec2 oa,
                        const ConvexPolygon& b, Vec2 ob) {
    auto separated_by_edges = [](const ConvexPolygon& p, Vec2 op,
                                 const ConvexPolygon& q, Vec2 oq) {
        const auto& pv = p.vertices();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            Vec2 e = pv[(i + 1) % pv.size()] - pv[i];
            Vec2 axis{-e.y, e.x};
            double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
            for (Vec2 v : pv) {
                double d = dot(axis, v + op);
                pmin = std::min(pmin, d);
                pmax = std::max(pmax, d);
            }
            double qmin = std::numeric_limits<double>::infinity(), qmax = -qmin;
            for (Vec2 v : q.vertices()) {
                double d = dot(axis, v + oq);
                qmin = std::min(qmin, d);
                qmax = std::max(qmax, d);
            }
            if (pmax < qmin - kEps || qmax < pmin - kEps) return true;
        }
        return false;
    };
    return !separated_by_edges(a, oa, b, ob) && !separated_by_edges(b, ob, a, oa);
}

double outline_distance(const ConvexPolygon& a, Vec2 oa,
                        const ConvexPolygon& b, Vec2 ob) {
    double best = std::numeric_limits<double>::infinity();
    auto sa = a.outline(oa);
    auto sb = b.outline(ob);
    for (const auto& s : sa)
        for (const auto& t : sb) {
            best = std::min(best, min_segment_distance(s, t));
            if (best == 0.0) return 0.0;
        }
    return best;
}

}  // namespace gridnav
