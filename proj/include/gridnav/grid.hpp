#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "gridnav/geometry.hpp"

namespace gridnav {

struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell&) const = default;
};

inline Vec2 cell_center(Cell c) { return {c.col + 0.5, c.row + 0.5}; }

enum class Connectivity { Four, Eight };
enum class Metric { Euclidean, Manhattan };

struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Occupancy grid. '@' cells are static obstacles, '.' cells are free.
// Immutable after construction.
class GridMap {
public:
    GridMap(int height, int width, std::vector<uint8_t> blocked);

    int height() const { return height_; }
    int width() const { return width_; }

    bool in_bounds(Cell c) const {
        return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
    }
    bool blocked(Cell c) const { return blocked_[c.row * width_ + c.col]; }
    bool free(Cell c) const { return in_bounds(c) && !blocked(c); }

    std::size_t cell_count() const { return blocked_.size(); }
    int index(Cell c) const { return c.row * width_ + c.col; }
    Cell cell(int index) const { return {index / width_, index % width_}; }

    std::vector<Cell> obstacle_cells() const;
    double diagonal() const;

private:
    int height_;
    int width_;
    std::vector<uint8_t> blocked_;
};

// Header: `type octile`, `height H`, `width W`, `map`, then H rows of
// {'.', '@'}. Throws GridError naming line/column on malformed input.
GridMap parse_map(const std::string& text);
std::string serialize_map(const GridMap& map);

double step_distance(Cell a, Cell b, Metric metric);
double heuristic_distance(Cell a, Cell b, Metric metric);

// Free in-bounds neighbors of a free cell with their edge lengths.
// Throws GridError if the queried cell is blocked or out of bounds.
std::vector<std::pair<Cell, double>> neighbors(const GridMap& map, Cell c,
                                               Connectivity conn,
                                               Metric metric);

// In-bounds lattice neighbors regardless of occupancy; planners block
// moves through the footprint cost model instead.
std::vector<std::pair<Cell, double>> neighbors_lattice(const GridMap& map, Cell c,
                                                       Connectivity conn,
                                                       Metric metric);

}  // namespace gridnav
