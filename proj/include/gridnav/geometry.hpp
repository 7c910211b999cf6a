#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gridnav {

// x runs along columns, y along rows. Cell (r,c) owns the closed unit
// square [c,c+1] x [r,r+1]; its center is (c+0.5, r+0.5).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

struct Segment {
    Vec2 a;
    Vec2 b;
};

// Shortest Euclidean distance between two closed segments; 0 iff they
// intersect. Zero-length segments act as points.
double min_segment_distance(const Segment& s, const Segment& t);

double point_segment_distance(Vec2 p, const Segment& s);

// Strictly convex polygon, vertices stored counter-clockwise. The anchor
// (local origin) is placed on the agent's current cell center.
class ConvexPolygon {
public:
    static ConvexPolygon from_vertices(std::vector<Vec2> vertices);

    const std::vector<Vec2>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }

    // Closed containment (boundary counts).
    bool contains(Vec2 p, Vec2 offset = {}) const;

    std::vector<Segment> outline(Vec2 offset = {}) const;

    // Axis-aligned bounds of the translated polygon.
    void bounds(Vec2 offset, Vec2& lo, Vec2& hi) const;

    // Largest distance from the anchor to any vertex.
    double radius() const;

private:
    std::vector<Vec2> vertices_;
};

// Closed-set intersection test (touching counts) between two convex
// polygons translated by the given offsets.
bool polygons_intersect(const ConvexPolygon& a, Vec2 offset_a,
                        const ConvexPolygon& b, Vec2 offset_b);

// Minimum distance between the two polygon outlines; 0 if they touch or
// cross. Does not detect containment.
double outline_distance(const ConvexPolygon& a, Vec2 offset_a,
                        const ConvexPolygon& b, Vec2 offset_b);

}  // namespace gridnav
