#include "gridnav/grid.hpp"

#include <cmath>
#include <sstream>

namespace gridnav {

GridMap::GridMap(int height, int width, std::vector<uint8_t> blocked)
    : height_(height), width_(width), blocked_(std::move(blocked)) {
    if (height_ <= 0 || width_ <= 0)
        throw GridError("map dimensions must be positive");
    if (blocked_.size() != static_cast<std::size_t>(height_) * width_)
        throw GridError("occupancy size does not match dimensions");
}

std::vector<Cell> GridMap::obstacle_cells() const {
    std::vector<Cell> out;
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c)
            if (blocked_[r * width_ + c]) out.push_back({r, c});
    return out;
}

double GridMap::diagonal() const {
    return std::sqrt(double(height_) * height_ + double(width_) * width_);
}

namespace {

std::string expect_header(std::istringstream& in, const std::string& key,
                          int line_no) {
    std::string line;
    if (!std::getline(in, line))
        throw GridError("line " + std::to_string(line_no) +
                        ": missing header '" + key + "'");
    std::istringstream ls(line);
    std::string word, value;
    ls >> word;
    if (word != key)
        throw GridError("line " + std::to_string(line_no) + ": expected '" +
                        key + "', got '" + word + "'");
    ls >> value;
    return value;
}

}  // namespace

GridMap parse_map(const std::string& text) {
    std::istringstream in(text);
    expect_header(in, "type", 1);
    int height = 0, width = 0;
    try {
        height = std::stoi(expect_header(in, "height", 2));
        width = std::stoi(expect_header(in, "width", 3));
    } catch (const std::exception&) {
        throw GridError("invalid height/width header");
    }
    if (height <= 0 || width <= 0) throw GridError("zero map dimensions");
    expect_header(in, "map", 4);

    std::vector<uint8_t> blocked;
    blocked.reserve(static_cast<std::size_t>(height) * width);
    std::string line;
    for (int r = 0; r < height; ++r) {
        if (!std::getline(in, line))
            throw GridError("line " + std::to_string(5 + r) +
                            ": missing map row " + std::to_string(r));
        while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
            line.pop_back();
        if (static_cast<int>(line.size()) != width)
            throw GridError("line " + std::to_string(5 + r) + ": row has " +
                            std::to_string(line.size()) + " glyphs, expected " +
                            std::to_string(width));
        for (int c = 0; c < width; ++c) {
            char g = line[c];
            if (g == '.')
                blocked.push_back(0);
            else if (g == '@')
                blocked.push_back(1);
            else
                throw GridError("line " + std::to_string(5 + r) + ", column " +
                                std::to_string(c + 1) + ": unknown glyph '" +
                                std::string(1, g) + "'");
        }
    }
    return GridMap(height, width, std::move(blocked));
}

std::string serialize_map(const GridMap& map) {
    std::ostringstream out;
    out << "type octile\n"
        << "height " << map.height() << "\n"
        << "width " << map.width() << "\n"
        << "map\n";
    for (int r = 0; r < map.height(); ++r) {
        for (int c = 0; c < map.width(); ++c)
            out << (map.blocked({r, c}) ? '@' : '.');
        out << '\n';
    }
    return out.str();
}

double step_distance(Cell a, Cell b, Metric metric) {
    int dr = std::abs(a.row - b.row);
    int dc = std::abs(a.col - b.col);
    if (metric == Metric::Manhattan) return dr + dc;
    return std::sqrt(double(dr) * dr + double(dc) * dc);
}

double heuristic_distance(Cell a, Cell b, Metric metric) {
    return step_distance(a, b, metric);
}

std::vector<std::pair<Cell, double>> neighbors(const GridMap& map, Cell c,
                                               Connectivity conn,
                                               Metric metric) {
    if (!map.in_bounds(c)) throw GridError("neighbors: cell out of bounds");
    if (map.blocked(c)) throw GridError("neighbors: cell is an obstacle");

    static constexpr int kOrtho[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
    static constexpr int kDiag[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};

    std::vector<std::pair<Cell, double>> out;
    for (const auto& [dr, dc] : kOrtho) {
        Cell n{c.row + dr, c.col + dc};
        if (map.free(n)) out.emplace_back(n, step_distance(c, n, metric));
    }
    if (conn == Connectivity::Eight) {
        for (const auto& [dr, dc] : kDiag) {
            Cell n{c.row + dr, c.col + dc};
            if (map.free(n)) out.emplace_back(n, step_distance(c, n, metric));
        }
    }
    return out;
}

std::vector<std::pair<Cell, double>> neighbors_lattice(const GridMap& map, Cell c,
                                                       Connectivity conn,
                                                       Metric metric) {
    static constexpr int kOrtho[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
    static constexpr int kDiag[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    std::vector<std::pair<Cell, double>> out;
    for (const auto& [dr, dc] : kOrtho) {
        Cell n{c.row + dr, c.col + dc};
        if (map.in_bounds(n)) out.emplace_back(n, step_distance(c, n, metric));
    }
    if (conn == Connectivity::Eight) {
        for (const auto& [dr, dc] : kDiag) {
            Cell n{c.row + dr, c.col + dc};
            if (map.in_bounds(n)) out.emplace_back(n, step_distance(c, n, metric));
        }
    }
    return out;
}

}  // namespace gridnav
