#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "gridnav/geometry.hpp"
#include "helpers.hpp"

using namespace gridnav;

namespace {

ConvexPolygon unit_square(double half = 0.5) {
    return ConvexPolygon::from_vertices(
        {{-half, -half}, {half, -half}, {half, half}, {-half, half}});
}

}  // namespace

TEST_CASE("segment distance: crossing segments give zero") {
    Segment s{{0, 0}, {2, 2}};
    Segment t{{0, 2}, {2, 0}};
    CHECK(min_segment_distance(s, t) == doctest::Approx(0.0));
}

TEST_CASE("segment distance: touching endpoints give zero") {
    Segment s{{0, 0}, {1, 0}};
    Segment t{{1, 0}, {1, 5}};
    CHECK(min_segment_distance(s, t) == doctest::Approx(0.0));
}

TEST_CASE("segment distance: parallel segments") {
    Segment s{{0, 0}, {4, 0}};
    Segment t{{1, 3}, {3, 3}};
    CHECK(min_segment_distance(s, t) == doctest::Approx(3.0));
}

TEST_CASE("segment distance: closest at interior point") {
    Segment s{{0, 0}, {10, 0}};
    Segment t{{5, 2}, {5, 7}};
    CHECK(min_segment_distance(s, t) == doctest::Approx(2.0));
}

TEST_CASE("segment distance: degenerate point segments") {
    Segment p{{1, 1}, {1, 1}};
    Segment q{{4, 5}, {4, 5}};
    CHECK(min_segment_distance(p, q) == doctest::Approx(5.0));
    Segment s{{0, 0}, {8, 0}};
    CHECK(min_segment_distance(p, s) == doctest::Approx(1.0));
}

TEST_CASE("segment distance is symmetric and nonnegative on random input") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 500; ++i) {
        Segment s{{u(rng), u(rng)}, {u(rng), u(rng)}};
        Segment t{{u(rng), u(rng)}, {u(rng), u(rng)}};
        double d1 = min_segment_distance(s, t);
        double d2 = min_segment_distance(t, s);
        CHECK(d1 >= 0.0);
        CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
        // never below the endpoint-pair minimum minus slack, never above it
        double emin = std::min({norm(s.a - t.a), norm(s.a - t.b),
                                norm(s.b - t.a), norm(s.b - t.b)});
        CHECK(d1 <= emin + 1e-12);
    }
}

TEST_CASE("point-segment distance basics") {
    Segment s{{0, 0}, {10, 0}};
    CHECK(point_segment_distance({5, 3}, s) == doctest::Approx(3.0));
    CHECK(point_segment_distance({-3, 4}, s) == doctest::Approx(5.0));
    CHECK(point_segment_distance({7, 0}, s) == doctest::Approx(0.0));
}

TEST_CASE("polygon construction enforces strict convexity") {
    CHECK_THROWS(ConvexPolygon::from_vertices({{0, 0}, {1, 0}}));
    CHECK_THROWS(ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {2, 0}}));
    // collinear middle vertex
    CHECK_THROWS(
        ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {2, 0}, {1, 1}}));
    // reflex vertex
    CHECK_THROWS(ConvexPolygon::from_vertices(
        {{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}}));
    CHECK_NOTHROW(ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {0, 1}}));
}

TEST_CASE("polygon accepts clockwise input and stores counter-clockwise") {
    ConvexPolygon p =
        ConvexPolygon::from_vertices({{0, 1}, {1, 0}, {0, 0}});  // clockwise
    double area2 = 0.0;
    const auto& v = p.vertices();
    for (std::size_t i = 0; i < v.size(); ++i)
        area2 += cross(v[i], v[(i + 1) % v.size()]);
    CHECK(area2 > 0.0);
}

TEST_CASE("containment is closed (boundary counts)") {
    ConvexPolygon sq = unit_square();
    CHECK(sq.contains({0.0, 0.0}));
    CHECK(sq.contains({0.5, 0.5}));    // corner
    CHECK(sq.contains({0.5, 0.0}));    // edge
    CHECK(!sq.contains({0.51, 0.0}));
    CHECK(sq.contains({0.0, 0.0}, {10.0, 10.0}) == false);
    CHECK(sq.contains({10.0, 10.0}, {10.0, 10.0}));
}

TEST_CASE("outline and bounds follow the offset") {
    ConvexPolygon sq = unit_square();
    Vec2 lo, hi;
    sq.bounds({3.0, 4.0}, lo, hi);
    CHECK(lo.x == doctest::Approx(2.5));
    CHECK(lo.y == doctest::Approx(3.5));
    CHECK(hi.x == doctest::Approx(3.5));
    CHECK(hi.y == doctest::Approx(4.5));
    CHECK(sq.outline({3.0, 4.0}).size() == 4);
    CHECK(sq.radius() == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("polygon intersection is closed-set") {
    ConvexPolygon a = unit_square();
    ConvexPolygon b = unit_square();
    CHECK(polygons_intersect(a, {0, 0}, b, {0.9, 0}));
    CHECK(polygons_intersect(a, {0, 0}, b, {1.0, 0}));  // touching edges
    CHECK(!polygons_intersect(a, {0, 0}, b, {1.001, 0}));
    // containment: small square inside big square
    ConvexPolygon big = unit_square(3.0);
    CHECK(polygons_intersect(big, {0, 0}, a, {0.5, 0.5}));
    CHECK(polygons_intersect(a, {0.5, 0.5}, big, {0, 0}));
}

TEST_CASE("outline distance matches the Minkowski-difference oracle") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> off(-6.0, 6.0);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        ConvexPolygon a = oracle::random_polygon(rng, 2.0);
        ConvexPolygon b = oracle::random_polygon(rng, 2.0);
        Vec2 oa{off(rng), off(rng)}, ob{off(rng), off(rng)};
        double expect = oracle::minkowski_distance(a, oa, b, ob);
        if (expect == 0.0) continue;  // overlap handled by intersection test
        ++checked;
        CHECK(outline_distance(a, oa, b, ob) ==
              doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK(checked > 50);
}
