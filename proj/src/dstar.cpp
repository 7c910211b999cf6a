#include "gridnav/dstar.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <unordered_set>

namespace gridnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

double path_length(const std::vector<Cell>& waypoints, Metric metric) {
    double len = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i)
        len += step_distance(waypoints[i - 1], waypoints[i], metric);
    return len;
}

std::shared_ptr<const StaticCostTable> build_static_table(
    const GridMap& map, const ConvexPolygon& model, double safety_distance) {
    auto table = std::make_shared<StaticCostTable>();
    table->blocked.assign(map.cell_count(), 0);
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c) {
            Cell cell{r, c};
            bool blocked = map.blocked(cell) ||
                           check_static_collision(model, cell_center(cell), map,
                                                  safety_distance);
            table->blocked[map.index(cell)] = blocked;
        }
    table->stamp = collision_stamp(model, safety_distance);
    return table;
}

DStarPlanner::DStarPlanner(const GridMap& map, const ConvexPolygon& model,
                           Cell goal, PlannerConfig config,
                           std::shared_ptr<const StaticCostTable> table)
    : map_(map), model_(model), goal_(goal), config_(config),
      table_(std::move(table)) {
    if (!map_.in_bounds(goal_)) throw GridError("planner goal out of bounds");
    if (!table_) table_ = build_static_table(map_, model_, config_.safety_distance);
    g_.assign(map_.cell_count(), kInf);
    rhs_.assign(map_.cell_count(), kInf);
    dyn_count_.assign(map_.cell_count(), 0);
    queued_key_.assign(map_.cell_count(), {});
    in_queue_.assign(map_.cell_count(), 0);
}

bool DStarPlanner::static_blocked(Cell c) const {
    return table_->blocked[map_.index(c)];
}

bool DStarPlanner::placement_blocked(Cell c) const {
    int idx = map_.index(c);
    return table_->blocked[idx] || dyn_count_[idx] > 0;
}

double DStarPlanner::cost(Cell a, Cell b) const {
    if (placement_blocked(a) || placement_blocked(b)) return kInf;
    return step_distance(a, b, config_.metric);
}

void DStarPlanner::for_each_neighbor(int idx, auto&& fn) const {
    Cell c = map_.cell(idx);
    static constexpr int kOrtho[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
    static constexpr int kDiag[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    for (const auto& [dr, dc] : kOrtho) {
        Cell n{c.row + dr, c.col + dc};
        if (map_.in_bounds(n)) fn(map_.index(n), n);
    }
    if (config_.connectivity == Connectivity::Eight)
        for (const auto& [dr, dc] : kDiag) {
            Cell n{c.row + dr, c.col + dc};
            if (map_.in_bounds(n)) fn(map_.index(n), n);
        }
}

DStarPlanner::Key DStarPlanner::calculate_key(int idx) const {
    double m = std::min(g_[idx], rhs_[idx]);
    return {m + heuristic_distance(start_, map_.cell(idx), config_.metric) +
                key_modifier_,
            m};
}

void DStarPlanner::update_vertex(int idx) {
    if (map_.cell(idx) != goal_) {
        double best = kInf;
        Cell u = map_.cell(idx);
        if (!placement_blocked(u)) {
            for_each_neighbor(idx, [&](int nidx, Cell n) {
                if (placement_blocked(n)) return;
                double c = step_distance(u, n, config_.metric) + g_[nidx];
                best = std::min(best, c);
            });
        }
        rhs_[idx] = best;
    }
    if (in_queue_[idx]) {
        queue_.erase({queued_key_[idx].first, queued_key_[idx].second, idx});
        in_queue_[idx] = 0;
    }
    if (g_[idx] != rhs_[idx]) {
        Key k = calculate_key(idx);
        queue_.insert({k.first, k.second, idx});
        queued_key_[idx] = k;
        in_queue_[idx] = 1;
    }
}

PlanStatus DStarPlanner::compute_shortest_path(long expansion_limit,
                                               double deadline_s,
                                               long& expansions) {
    int start_idx = map_.index(start_);
    while (!queue_.empty()) {
        auto [k1, k2, idx] = *queue_.begin();
        Key k_start = calculate_key(start_idx);
        bool top_lt_start =
            k1 < k_start.first || (k1 == k_start.first && k2 < k_start.second);
        if (!top_lt_start && rhs_[start_idx] == g_[start_idx]) break;

        if (expansion_limit >= 0 && expansions >= expansion_limit)
            return PlanStatus::Timeout;
        if (deadline_s > 0.0 && now_seconds() > deadline_s)
            return PlanStatus::Timeout;

        queue_.erase(queue_.begin());
        in_queue_[idx] = 0;
        Key k_old{k1, k2};
        Key k_new = calculate_key(idx);
        ++expansions;
        if (trace_) {
            Cell c = map_.cell(idx);
            *trace_ << c.row << ' ' << c.col << ' ' << g_[idx] << ' ' << rhs_[idx]
                    << ' ' << k1 << ' ' << k2 << '\n';
        }
        if (k_old < k_new) {
            queue_.insert({k_new.first, k_new.second, idx});
            queued_key_[idx] = k_new;
            in_queue_[idx] = 1;
        } else if (g_[idx] > rhs_[idx]) {
            g_[idx] = rhs_[idx];
            for_each_neighbor(idx, [&](int nidx, Cell) { update_vertex(nidx); });
        } else {
            g_[idx] = kInf;
            update_vertex(idx);
            for_each_neighbor(idx, [&](int nidx, Cell) { update_vertex(nidx); });
        }
    }
    // a trivial start==goal query still needs a standable placement
    if (placement_blocked(start_)) return PlanStatus::Unreachable;
    return rhs_[map_.index(start_)] < kInf ? PlanStatus::Ok
                                           : PlanStatus::Unreachable;
}

PlanResult DStarPlanner::extract(PlanStatus status, long expansions,
                                 double elapsed) {
    PlanResult result;
    result.status = status;
    result.expansions = expansions;
    result.elapsed_seconds = elapsed;
    result.planning_time = config_.deterministic_timing
                               ? expansions * config_.seconds_per_expansion
                               : elapsed;
    if (status != PlanStatus::Ok) return result;

    std::vector<Cell> waypoints{start_};
    Cell s = start_;
    std::size_t guard = 4 * map_.cell_count() + 16;
    while (s != goal_) {
        if (waypoints.size() > guard) {
            result.status = PlanStatus::Unreachable;
            return result;
        }
        double best = kInf;
        int best_idx = -1;
        for_each_neighbor(map_.index(s), [&](int nidx, Cell n) {
            double c = cost(s, n) + g_[nidx];
            if (c < best || (c == best && nidx < best_idx)) {
                best = c;
                best_idx = nidx;
            }
        });
        if (best_idx < 0 || best == kInf) {
            result.status = PlanStatus::Unreachable;
            return result;
        }
        s = map_.cell(best_idx);
        waypoints.push_back(s);
    }
    result.path.waypoints = std::move(waypoints);
    result.path.total_length = path_length(result.path.waypoints, config_.metric);
    return result;
}

PlanResult DStarPlanner::plan(Cell start) {
    if (!map_.in_bounds(start)) throw GridError("planner start out of bounds");
    start_ = start;
    key_modifier_ = 0.0;
    std::fill(g_.begin(), g_.end(), kInf);
    std::fill(rhs_.begin(), rhs_.end(), kInf);
    std::fill(dyn_count_.begin(), dyn_count_.end(), 0);
    dynamic_cells_.clear();
    queue_.clear();
    std::fill(in_queue_.begin(), in_queue_.end(), 0);

    int goal_idx = map_.index(goal_);
    rhs_[goal_idx] = 0.0;
    Key k = calculate_key(goal_idx);
    queue_.insert({k.first, k.second, goal_idx});
    queued_key_[goal_idx] = k;
    in_queue_[goal_idx] = 1;

    long expansions = 0;
    double t0 = now_seconds();
    PlanStatus status = compute_shortest_path(-1, 0.0, expansions);
    planned_ = status == PlanStatus::Ok;
    return extract(status, expansions, now_seconds() - t0);
}

void DStarPlanner::apply_dynamic(const std::vector<Cell>& dynamic_cells,
                                 std::vector<int>& flipped) {
    std::unordered_set<int> old_set, new_set;
    for (Cell c : dynamic_cells_) old_set.insert(map_.index(c));
    for (Cell c : dynamic_cells)
        if (map_.in_bounds(c)) new_set.insert(map_.index(c));

    auto stamp_cells = [&](int obstacle_idx, int delta) {
        Cell o = map_.cell(obstacle_idx);
        for (Cell off : table_->stamp) {
            Cell w{o.row - off.row, o.col - off.col};
            if (!map_.in_bounds(w)) continue;
            int widx = map_.index(w);
            bool was = dyn_count_[widx] > 0;
            dyn_count_[widx] += delta;
            bool is = dyn_count_[widx] > 0;
            if (was != is) flipped.push_back(widx);
        }
    };
    for (int idx : old_set)
        if (!new_set.count(idx)) stamp_cells(idx, -1);
    for (int idx : new_set)
        if (!old_set.count(idx)) stamp_cells(idx, +1);

    dynamic_cells_.clear();
    for (int idx : new_set) dynamic_cells_.push_back(map_.cell(idx));
    std::sort(dynamic_cells_.begin(), dynamic_cells_.end());
}

PlanResult DStarPlanner::replan(Cell new_start,
                                const std::vector<Cell>& dynamic_cells) {
    if (!planned_) throw GridError("replan called before plan");
    if (!map_.in_bounds(new_start)) throw GridError("replan start out of bounds");

    double t0 = now_seconds();
    key_modifier_ += heuristic_distance(start_, new_start, config_.metric);
    start_ = new_start;

    std::vector<int> flipped;
    apply_dynamic(dynamic_cells, flipped);
    std::sort(flipped.begin(), flipped.end());
    flipped.erase(std::unique(flipped.begin(), flipped.end()), flipped.end());
    for (int idx : flipped) {
        update_vertex(idx);
        for_each_neighbor(idx, [&](int nidx, Cell) { update_vertex(nidx); });
    }

    long expansion_limit = -1;
    double deadline = 0.0;
    if (config_.deterministic_timing)
        expansion_limit = static_cast<long>(config_.replan_budget_seconds /
                                            config_.seconds_per_expansion);
    else
        deadline = t0 + config_.replan_budget_seconds;

    long expansions = 0;
    PlanStatus status = compute_shortest_path(expansion_limit, deadline, expansions);
    return extract(status, expansions, now_seconds() - t0);
}

PlanResult dijkstra_plan(const GridMap& map, const ConvexPolygon& model,
                         Cell start, Cell goal,
                         const std::vector<Cell>& dynamic_cells,
                         const PlannerConfig& config,
                         std::shared_ptr<const StaticCostTable> table) {
    if (!table) table = build_static_table(map, model, config.safety_distance);

    std::vector<int> dyn(map.cell_count(), 0);
    for (Cell o : dynamic_cells) {
        if (!map.in_bounds(o)) continue;
        for (Cell off : table->stamp) {
            Cell w{o.row - off.row, o.col - off.col};
            if (map.in_bounds(w)) dyn[map.index(w)] = 1;
        }
    }
    auto blocked = [&](Cell c) {
        int idx = map.index(c);
        return table->blocked[idx] || dyn[idx];
    };

    PlanResult result;
    double t0 = now_seconds();
    if (blocked(start) || blocked(goal)) {
        result.status = PlanStatus::Unreachable;
        result.elapsed_seconds = now_seconds() - t0;
        return result;
    }

    constexpr double kInfLocal = std::numeric_limits<double>::infinity();
    std::vector<double> dist(map.cell_count(), kInfLocal);
    std::vector<int> prev(map.cell_count(), -1);
    using QItem = std::pair<double, int>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
    dist[map.index(start)] = 0.0;
    pq.push({0.0, map.index(start)});
    long expansions = 0;
    while (!pq.empty()) {
        auto [d, idx] = pq.top();
        pq.pop();
        if (d > dist[idx]) continue;
        ++expansions;
        if (map.cell(idx) == goal) break;
        for (auto [n, len] : neighbors_lattice(map, map.cell(idx),
                                               config.connectivity, config.metric)) {
            if (blocked(n)) continue;
            int nidx = map.index(n);
            double nd = d + len;
            if (nd < dist[nidx] ||
                (nd == dist[nidx] && idx < prev[nidx] && prev[nidx] >= 0)) {
                dist[nidx] = nd;
                prev[nidx] = idx;
                pq.push({nd, nidx});
            }
        }
    }

    result.expansions = expansions;
    result.elapsed_seconds = now_seconds() - t0;
    result.planning_time = config.deterministic_timing
                               ? expansions * config.seconds_per_expansion
                               : result.elapsed_seconds;
    int goal_idx = map.index(goal);
    if (dist[goal_idx] == kInfLocal) {
        result.status = PlanStatus::Unreachable;
        return result;
    }
    std::vector<Cell> waypoints;
    for (int idx = goal_idx; idx >= 0; idx = prev[idx]) {
        waypoints.push_back(map.cell(idx));
        if (map.cell(idx) == start) break;
    }
    std::reverse(waypoints.begin(), waypoints.end());
    result.status = PlanStatus::Ok;
    result.path.waypoints = std::move(waypoints);
    result.path.total_length = path_length(result.path.waypoints, config.metric);
    return result;
}

}  // namespace gridnav
