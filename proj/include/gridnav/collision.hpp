#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridnav/grid.hpp"

namespace gridnav {

struct CollisionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A footprint polygon anchored on a cell center.
struct Placement {
    const ConvexPolygon* model = nullptr;
    Cell cell;
    Vec2 offset() const { return cell_center(cell); }
};

// Closed-set test: does the polygon (translated by `offset`) touch the
// unit square of `cell`?
bool polygon_covers_square(const ConvexPolygon& poly, Vec2 offset, Cell cell);

// Strict-interior overlap between the translated polygon and the square.
bool polygon_square_overlap(const ConvexPolygon& poly, Vec2 offset, Cell cell);

// Minimum outline distance between the translated polygon and the square;
// 0 when they touch or cross.
double polygon_square_distance(const ConvexPolygon& poly, Vec2 offset, Cell cell);

// Cells whose closed unit squares intersect the translated polygon.
// Unbounded variant works on the infinite lattice.
std::vector<Cell> covered_cells_unbounded(const ConvexPolygon& poly, Vec2 offset);

// Bounded variant; throws CollisionError listing the clipped extent when
// the polygon sticks off the map.
std::vector<Cell> covered_cells(const ConvexPolygon& poly, Cell anchor,
                                int height, int width);

// Agent-vs-agent collision: outlines touch/cross, one contains the other,
// or the outline gap is below the safety distance d.
bool check_collision(const ConvexPolygon& a, Vec2 offset_a,
                     const ConvexPolygon& b, Vec2 offset_b, double d);
bool check_collision(const Placement& p, const Placement& q, double d);

// Minimum outline gap between two translated footprints (0 if touching).
double footprint_distance(const ConvexPolygon& a, Vec2 offset_a,
                          const ConvexPolygon& b, Vec2 offset_b);

// Static collision at an arbitrary continuous position: true when the
// polygon overlaps an obstacle square, comes within d of one, leaves the
// map, or comes within d of the map boundary.
bool check_static_collision(const ConvexPolygon& poly, Vec2 offset,
                            const GridMap& map, double d);
bool check_static_collision(const Placement& p, const GridMap& map, double d);

// Relative cell offsets (dr,dc) such that a single obstacle square at
// anchor+(dr,dc) triggers a static collision for a footprint anchored at
// `anchor`. Translation invariant, so it is computed once per (model,d).
std::vector<Cell> collision_stamp(const ConvexPolygon& poly, double d);

// Named footprints: one per line, `name x,y; x,y; ...` in cell units
// relative to the anchor. '#' comments and blank lines are skipped.
class FootprintLibrary {
public:
    static FootprintLibrary parse(const std::string& text);
    static FootprintLibrary builtin();  // square1, square3, plane

    void add(const std::string& name, ConvexPolygon poly);
    const ConvexPolygon& get(const std::string& name) const;
    bool has(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, ConvexPolygon> models_;
};

struct AgentSpec {
    std::string id;
    std::string footprint;
    Cell start;
    Cell goal;
};

struct Scenario {
    const GridMap* map = nullptr;
    std::vector<AgentSpec> agents;
    double safety_distance = 0.0;
    int step_limit = 60;
};

// One agent per line: `id polygon_spec start_row start_col goal_row
// goal_col`. Start/goal placements are validated against the static map
// at the given safety distance.
Scenario parse_scenario(const std::string& text, const GridMap& map,
                        const FootprintLibrary& footprints,
                        double safety_distance, int step_limit = 60);

std::string serialize_scenario(const Scenario& scenario);

}  // namespace gridnav
