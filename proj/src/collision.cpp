#include "gridnav/collision.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gridnav {

namespace {

ConvexPolygon unit_square() {
    return ConvexPolygon::from_vertices(
        {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});
}

const ConvexPolygon& square_model() {
    static const ConvexPolygon sq = unit_square();
    return sq;
}

constexpr double kEps = 1e-12;

}  // namespace

bool polygon_covers_square(const ConvexPolygon& poly, Vec2 offset, Cell cell) {
    return polygons_intersect(poly, offset, square_model(), cell_center(cell));
}

bool polygon_square_overlap(const ConvexPolygon& poly, Vec2 offset, Cell cell) {
    // Strict interior overlap: intersect under closed SAT but with a
    // positive gap requirement, i.e. shrink the tolerance the other way.
    Vec2 sq = cell_center(cell);
    auto separated = [&](const ConvexPolygon& p, Vec2 op, const ConvexPolygon& q,
                         Vec2 oq) {
        const auto& pv = p.vertices();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            Vec2 e = pv[(i + 1) % pv.size()] - pv[i];
            Vec2 axis{-e.y, e.x};
            double pmin = 1e300, pmax = -1e300, qmin = 1e300, qmax = -1e300;
            for (Vec2 v : pv) {
                double dv = dot(axis, v + op);
                pmin = std::min(pmin, dv);
                pmax = std::max(pmax, dv);
            }
            for (Vec2 v : q.vertices()) {
                double dv = dot(axis, v + oq);
                qmin = std::min(qmin, dv);
                qmax = std::max(qmax, dv);
            }
            if (pmax <= qmin + kEps || qmax <= pmin + kEps) return true;
        }
        return false;
    };
    return !separated(poly, offset, square_model(), sq) &&
           !separated(square_model(), sq, poly, offset);
}

double polygon_square_distance(const ConvexPolygon& poly, Vec2 offset, Cell cell) {
    if (polygon_covers_square(poly, offset, cell)) return 0.0;
    return outline_distance(poly, offset, square_model(), cell_center(cell));
}

std::vector<Cell> covered_cells_unbounded(const ConvexPolygon& poly, Vec2 offset) {
    Vec2 lo, hi;
    poly.bounds(offset, lo, hi);
    int r0 = static_cast<int>(std::floor(lo.y - 0.5));
    int r1 = static_cast<int>(std::ceil(hi.y + 0.5));
    int c0 = static_cast<int>(std::floor(lo.x - 0.5));
    int c1 = static_cast<int>(std::ceil(hi.x + 0.5));
    std::vector<Cell> out;
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            if (polygon_covers_square(poly, offset, {r, c})) out.push_back({r, c});
    return out;
}

std::vector<Cell> covered_cells(const ConvexPolygon& poly, Cell anchor,
                                int height, int width) {
    auto cells = covered_cells_unbounded(poly, cell_center(anchor));
    std::vector<Cell> clipped;
    for (Cell c : cells)
        if (c.row < 0 || c.row >= height || c.col < 0 || c.col >= width)
            clipped.push_back(c);
    if (!clipped.empty()) {
        std::ostringstream msg;
        msg << "footprint at (" << anchor.row << "," << anchor.col
            << ") extends off-map; clipped cells:";
        for (Cell c : clipped) msg << " (" << c.row << "," << c.col << ")";
        throw CollisionError(msg.str());
    }
    return cells;
}

double footprint_distance(const ConvexPolygon& a, Vec2 oa,
                          const ConvexPolygon& b, Vec2 ob) {
    return outline_distance(a, oa, b, ob);
}

bool check_collision(const ConvexPolygon& a, Vec2 oa, const ConvexPolygon& b,
                     Vec2 ob, double d) {
    double dist = outline_distance(a, oa, b, ob);
    if (dist <= kEps) return true;  // outlines touch or cross
    // Disjoint outlines: containment means one anchor-side vertex of one
    // polygon lies inside the other.
    if (a.contains(b.vertices()[0] + ob, oa)) return true;
    if (b.contains(a.vertices()[0] + oa, ob)) return true;
    return dist < d;
}

bool check_collision(const Placement& p, const Placement& q, double d) {
    return check_collision(*p.model, p.offset(), *q.model, q.offset(), d);
}

bool check_static_collision(const ConvexPolygon& poly, Vec2 offset,
                            const GridMap& map, double d) {
    // Map boundary acts as an obstacle: margin is the smallest distance
    // from any vertex to the outer rectangle.
    Vec2 lo, hi;
    poly.bounds(offset, lo, hi);
    double margin = std::min({lo.x, lo.y, map.width() - hi.x, map.height() - hi.y});
    if (margin < 0.0) return true;  // off map
    if (margin < d) return true;

    int r0 = std::max(0, static_cast<int>(std::floor(lo.y - d - 0.5)));
    int r1 = std::min(map.height() - 1, static_cast<int>(std::ceil(hi.y + d + 0.5)));
    int c0 = std::max(0, static_cast<int>(std::floor(lo.x - d - 0.5)));
    int c1 = std::min(map.width() - 1, static_cast<int>(std::ceil(hi.x + d + 0.5)));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) {
            Cell cell{r, c};
            if (!map.blocked(cell)) continue;
            if (polygon_square_overlap(poly, offset, cell)) return true;
            if (polygon_square_distance(poly, offset, cell) < d) return true;
        }
    return false;
}

bool check_static_collision(const Placement& p, const GridMap& map, double d) {
    return check_static_collision(*p.model, p.offset(), map, d);
}

std::vector<Cell> collision_stamp(const ConvexPolygon& poly, double d) {
    int radius = static_cast<int>(std::ceil(poly.radius() + d)) + 1;
    Vec2 origin = cell_center({0, 0});
    std::vector<Cell> stamp;
    for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc) {
            Cell cell{dr, dc};
            if (polygon_square_overlap(poly, origin, cell) ||
                polygon_square_distance(poly, origin, cell) < d)
                stamp.push_back(cell);
        }
    return stamp;
}

FootprintLibrary FootprintLibrary::parse(const std::string& text) {
    FootprintLibrary lib;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name)) continue;
        std::string rest;
        std::getline(ls, rest);
        std::vector<Vec2> verts;
        std::istringstream vs(rest);
        std::string tok;
        while (std::getline(vs, tok, ';')) {
            double x, y;
            char comma;
            std::istringstream ts(tok);
            if (!(ts >> x >> comma >> y) || comma != ',')
                throw CollisionError("footprint line " + std::to_string(line_no) +
                                     ": bad vertex '" + tok + "'");
            verts.push_back({x, y});
        }
        try {
            lib.add(name, ConvexPolygon::from_vertices(std::move(verts)));
        } catch (const std::invalid_argument& e) {
            throw CollisionError("footprint '" + name + "': " + e.what());
        }
    }
    return lib;
}

FootprintLibrary FootprintLibrary::builtin() {
    FootprintLibrary lib;
    lib.add("square1", unit_square());
    lib.add("square3", ConvexPolygon::from_vertices(
                           {{-1.5, -1.5}, {1.5, -1.5}, {1.5, 1.5}, {-1.5, 1.5}}));
    // Aircraft-style hexagon, 7 cells long; rasterizes to 23 grid cells.
    lib.add("plane", ConvexPolygon::from_vertices({{0.0, -2.6},
                                                   {1.5, -1.0},
                                                   {1.5, 1.0},
                                                   {0.0, 2.6},
                                                   {-1.5, 1.0},
                                                   {-1.5, -1.0}}));
    return lib;
}

void FootprintLibrary::add(const std::string& name, ConvexPolygon poly) {
    models_.insert_or_assign(name, std::move(poly));
}

const ConvexPolygon& FootprintLibrary::get(const std::string& name) const {
    auto it = models_.find(name);
    if (it == models_.end())
        throw CollisionError("unknown footprint '" + name + "'");
    return it->second;
}

bool FootprintLibrary::has(const std::string& name) const {
    return models_.count(name) > 0;
}

std::vector<std::string> FootprintLibrary::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : models_) out.push_back(k);
    return out;
}

Scenario parse_scenario(const std::string& text, const GridMap& map,
                        const FootprintLibrary& footprints,
                        double safety_distance, int step_limit) {
    if (safety_distance < 0.0)
        throw CollisionError("safety distance must be non-negative");
    Scenario scn;
    scn.map = &map;
    scn.safety_distance = safety_distance;
    scn.step_limit = step_limit;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        AgentSpec a;
        if (!(ls >> a.id)) continue;
        if (!(ls >> a.footprint >> a.start.row >> a.start.col >> a.goal.row >>
              a.goal.col))
            throw CollisionError("scenario line " + std::to_string(line_no) +
                                 ": malformed agent line");
        for (const auto& other : scn.agents)
            if (other.id == a.id)
                throw CollisionError("duplicate agent id '" + a.id + "'");
        const ConvexPolygon& model = footprints.get(a.footprint);
        for (Cell c : {a.start, a.goal}) {
            if (!map.in_bounds(c))
                throw CollisionError("agent '" + a.id + "': cell (" +
                                     std::to_string(c.row) + "," +
                                     std::to_string(c.col) + ") out of bounds");
            if (check_static_collision(model, cell_center(c), map, safety_distance))
                throw CollisionError(
                    "agent '" + a.id + "': placement at (" + std::to_string(c.row) +
                    "," + std::to_string(c.col) + ") collides with static obstacles");
        }
        scn.agents.push_back(std::move(a));
    }
    return scn;
}

std::string serialize_scenario(const Scenario& scenario) {
    std::ostringstream out;
    for (const auto& a : scenario.agents)
        out << a.id << ' ' << a.footprint << ' ' << a.start.row << ' '
            << a.start.col << ' ' << a.goal.row << ' ' << a.goal.col << '\n';
    return out.str();
}

}  // namespace gridnav
