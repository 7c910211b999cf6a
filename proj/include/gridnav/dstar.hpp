#pragma once

#include <iosfwd>
#include <memory>
#include <set>
#include <tuple>
#include <vector>

#include "gridnav/collision.hpp"
#include "gridnav/grid.hpp"

namespace gridnav {

enum class PlanStatus { Ok, Unreachable, Timeout };

struct GuidancePath {
    std::vector<Cell> waypoints;
    double total_length = 0.0;
    int planned_at = 0;
};

double path_length(const std::vector<Cell>& waypoints, Metric metric);
inline double path_length(const GuidancePath& p, Metric metric) {
    return path_length(p.waypoints, metric);
}

struct PlanResult {
    PlanStatus status = PlanStatus::Unreachable;
    GuidancePath path;
    long expansions = 0;
    double elapsed_seconds = 0.0;
    // Planning time used by the cost metric: wall clock, or
    // expansions x seconds_per_expansion under deterministic timing.
    double planning_time = 0.0;
};

struct PlannerConfig {
    Connectivity connectivity = Connectivity::Four;
    Metric metric = Metric::Euclidean;
    double safety_distance = 0.0;
    double replan_budget_seconds = 3.0;
    bool deterministic_timing = false;
    double seconds_per_expansion = 1e-3;
};

// Footprint-aware blocking data shared between planners with the same
// (map, model, safety distance).
struct StaticCostTable {
    std::vector<uint8_t> blocked;  // placement collides with static world
    std::vector<Cell> stamp;       // obstacle offsets that block a placement
};

std::shared_ptr<const StaticCostTable> build_static_table(
    const GridMap& map, const ConvexPolygon& model, double safety_distance);

// Incremental D* Lite over footprint placements. One instance per agent
// and goal; replan() repairs the solution after dynamic obstacle changes
// or a start move.
class DStarPlanner {
public:
    DStarPlanner(const GridMap& map, const ConvexPolygon& model, Cell goal,
                 PlannerConfig config,
                 std::shared_ptr<const StaticCostTable> table = nullptr);

    // Initial plan against static obstacles only. Not budget limited.
    PlanResult plan(Cell start);

    // Repair after moving the start and/or swapping the dynamic obstacle
    // set (other agents' covered cells). Subject to the replan budget.
    PlanResult replan(Cell new_start, const std::vector<Cell>& dynamic_cells);

    // Edge cost under the swept-placement collision test; infinity when
    // either endpoint placement collides with the current snapshot.
    double cost(Cell a, Cell b) const;
    bool placement_blocked(Cell c) const;
    bool static_blocked(Cell c) const;

    Cell goal() const { return goal_; }
    const PlannerConfig& config() const { return config_; }
    void set_trace(std::ostream* trace) { trace_ = trace; }

private:
    using Key = std::pair<double, double>;

    Key calculate_key(int idx) const;
    void update_vertex(int idx);
    PlanStatus compute_shortest_path(long expansion_limit, double deadline_s,
                                     long& expansions);
    PlanResult extract(PlanStatus status, long expansions, double elapsed);
    void apply_dynamic(const std::vector<Cell>& dynamic_cells,
                       std::vector<int>& flipped);
    void for_each_neighbor(int idx, auto&& fn) const;

    const GridMap& map_;
    const ConvexPolygon& model_;
    Cell goal_;
    PlannerConfig config_;
    std::shared_ptr<const StaticCostTable> table_;

    std::vector<double> g_, rhs_;
    std::vector<int> dyn_count_;
    std::vector<Cell> dynamic_cells_;
    std::set<std::tuple<double, double, int>> queue_;
    std::vector<Key> queued_key_;
    std::vector<uint8_t> in_queue_;
    double key_modifier_ = 0.0;
    Cell start_{};
    bool planned_ = false;
    std::ostream* trace_ = nullptr;
};

// From-scratch Dijkstra over the same footprint-aware cost model. Used by
// forced-replan probes and suite generation.
PlanResult dijkstra_plan(const GridMap& map, const ConvexPolygon& model,
                         Cell start, Cell goal,
                         const std::vector<Cell>& dynamic_cells,
                         const PlannerConfig& config,
                         std::shared_ptr<const StaticCostTable> table = nullptr);

}  // namespace gridnav
