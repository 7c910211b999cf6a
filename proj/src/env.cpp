#include "gridnav/env.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace gridnav {

std::vector<double> Observation::flatten() const {
    std::vector<double> out;
    out.reserve(1 + agent_distances.size() + path_occupancy.size() +
                lateral_occupancy.size());
    out.push_back(goal_distance);
    for (double v : agent_distances) out.push_back(v);
    for (uint8_t v : path_occupancy) out.push_back(v);
    for (uint8_t v : lateral_occupancy) out.push_back(v);
    return out;
}

Environment::Environment(const Scenario& scenario,
                         const FootprintLibrary& footprints, EnvConfig config)
    : scenario_(&scenario), config_(config) {
    if (scenario.agents.empty()) throw GridError("scenario has no agents");
    for (const auto& spec : scenario.agents)
        models_.push_back(&footprints.get(spec.footprint));
}

std::vector<Observation> Environment::reset() {
    steps_ = 0;
    terminated_ = false;
    agents_.assign(scenario_->agents.size(), AgentState{});
    planners_.clear();
    covered_.clear();

    PlannerConfig pcfg;
    pcfg.connectivity = config_.connectivity;
    pcfg.metric = config_.metric;
    pcfg.safety_distance = scenario_->safety_distance;
    pcfg.replan_budget_seconds = config_.replan_budget_seconds;
    pcfg.deterministic_timing = config_.deterministic_timing;
    pcfg.seconds_per_expansion = config_.seconds_per_expansion;

    // Static tables are shared between agents with identical footprints.
    std::map<std::string, std::shared_ptr<const StaticCostTable>> tables;
    for (std::size_t i = 0; i < scenario_->agents.size(); ++i) {
        const auto& spec = scenario_->agents[i];
        auto& table = tables[spec.footprint];
        if (!table)
            table = build_static_table(*scenario_->map, *models_[i],
                                       scenario_->safety_distance);
        planners_.push_back(std::make_unique<DStarPlanner>(
            *scenario_->map, *models_[i], spec.goal, pcfg, table));
        PlanResult plan = planners_.back()->plan(spec.start);
        if (plan.status != PlanStatus::Ok)
            throw GridError("agent '" + spec.id +
                            "': no static guidance path from start to goal");
        AgentState& st = agents_[i];
        st.cell = spec.start;
        st.guidance = plan.path;
        st.guidance.planned_at = 0;
        st.guidance_index = 0;
        st.on_path = true;
        st.initial_guidance_length = plan.path.total_length;
        st.done = spec.start == spec.goal;
    }
    refresh_covered();
    reset_done_ = true;

    std::vector<Observation> obs;
    for (int i = 0; i < num_agents(); ++i) obs.push_back(observe(i));
    return obs;
}

void Environment::refresh_covered() {
    covered_.assign(agents_.size(), {});
    const GridMap& map = *scenario_->map;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        for (Cell c : covered_cells_unbounded(*models_[i],
                                              cell_center(agents_[i].cell)))
            if (map.in_bounds(c)) covered_[i].insert(map.index(c));
    }
}

std::vector<Cell> Environment::dynamic_cells_for(int agent) const {
    std::vector<Cell> cells;
    const GridMap& map = *scenario_->map;
    for (std::size_t j = 0; j < agents_.size(); ++j) {
        if (static_cast<int>(j) == agent) continue;
        for (int idx : covered_[j]) cells.push_back(map.cell(idx));
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return cells;
}

double Environment::remaining_guidance_length(int agent) const {
    const AgentState& st = agents_[agent];
    double len = 0.0;
    for (std::size_t k = st.guidance_index + 1; k < st.guidance.waypoints.size(); ++k)
        len += step_distance(st.guidance.waypoints[k - 1], st.guidance.waypoints[k],
                             config_.metric);
    if (!st.on_path && !st.guidance.waypoints.empty())
        len += step_distance(st.cell, st.guidance.waypoints[st.guidance_index],
                             config_.metric);
    return len;
}

bool Environment::placement_conflicts(int agent, Cell at) const {
    const GridMap& map = *scenario_->map;
    double d = scenario_->safety_distance;
    if (check_static_collision(*models_[agent], cell_center(at), map, d))
        return true;
    for (std::size_t j = 0; j < agents_.size(); ++j) {
        if (static_cast<int>(j) == agent) continue;
        if (check_collision(*models_[agent], cell_center(at), *models_[j],
                            cell_center(agents_[j].cell), d))
            return true;
    }
    return false;
}

Observation Environment::observe(int agent) const {
    const AgentState& st = agents_[agent];
    Observation obs;
    obs.agent_distances.assign(agents_.size() - 1, 0.0);
    obs.path_occupancy.assign(config_.lookahead, 0);
    obs.lateral_occupancy.assign(2 * config_.lookahead, 0);
    if (st.done) return obs;

    double init = std::max(st.initial_guidance_length, 1e-9);
    obs.goal_distance = remaining_guidance_length(agent) / init;

    const GridMap& map = *scenario_->map;
    double diag = map.diagonal();
    int slot = 0;
    for (std::size_t j = 0; j < agents_.size(); ++j) {
        if (static_cast<int>(j) == agent) continue;
        double dist = footprint_distance(*models_[agent], cell_center(st.cell),
                                         *models_[j], cell_center(agents_[j].cell));
        obs.agent_distances[slot++] = dist / diag;
    }

    for (int k = 1; k <= config_.lookahead; ++k) {
        std::size_t idx = st.guidance_index + k;
        if (idx >= st.guidance.waypoints.size()) break;
        if (placement_conflicts(agent, st.guidance.waypoints[idx]))
            obs.path_occupancy[k - 1] = 1;
    }

    // Heading: direction of the last move, else toward the next waypoint.
    int dr = 0, dc = 1;
    if (!st.history.empty()) {
        dr = st.cell.row - st.history.back().row;
        dc = st.cell.col - st.history.back().col;
    } else if (st.on_path &&
               st.guidance_index + 1 < static_cast<int>(st.guidance.waypoints.size())) {
        Cell next = st.guidance.waypoints[st.guidance_index + 1];
        dr = next.row - st.cell.row;
        dc = next.col - st.cell.col;
    }
    if (dr == 0 && dc == 0) dc = 1;
    int lr = -dc, lc = dr;  // left of heading
    for (int k = 1; k <= config_.lookahead; ++k) {
        Cell left{st.cell.row + k * lr, st.cell.col + k * lc};
        Cell right{st.cell.row - k * lr, st.cell.col - k * lc};
        auto occupied = [&](Cell c) {
            if (!map.in_bounds(c) || map.blocked(c)) return true;
            int idx = map.index(c);
            for (std::size_t j = 0; j < agents_.size(); ++j)
                if (static_cast<int>(j) != agent && covered_[j].count(idx))
                    return true;
            return false;
        };
        obs.lateral_occupancy[k - 1] = occupied(left);
        obs.lateral_occupancy[config_.lookahead + k - 1] = occupied(right);
    }
    return obs;
}

ActionMask Environment::mask(int agent) const {
    const AgentState& st = agents_[agent];
    RuleContext ctx;
    ctx.done = st.done;
    ctx.collided = st.collided;
    ctx.move_available =
        st.on_path &&
        st.guidance_index + 1 < static_cast<int>(st.guidance.waypoints.size());
    ctx.back_available = !st.history.empty();
    ctx.prev_action_back = steps_ > 0 && st.last_action == Action::Back;

    ctx.all_others_done = true;
    bool any_other_active = false;
    bool all_waited = steps_ > 0;
    for (std::size_t j = 0; j < agents_.size(); ++j) {
        if (static_cast<int>(j) == agent) continue;
        if (!agents_[j].done) {
            ctx.all_others_done = false;
            any_other_active = true;
            if (agents_[j].last_action != Action::Wait) all_waited = false;
        }
    }
    ctx.all_others_waited = any_other_active && all_waited;

    if (!st.done) {
        Observation obs = observe(agent);
        for (int k = 0; k < config_.lookahead; ++k)
            if (obs.path_occupancy[k]) {
                ctx.conflict_within_lookahead = true;
                if (k == 0) ctx.next_step_conflict = true;
            }
        if (ctx.all_others_done && config_.rules.mask_enabled) {
            // Rule 2 probe: is a fresh plan around the parked agents
            // strictly shorter than the current remaining path?
            PlannerConfig pcfg = planners_[agent]->config();
            PlanResult fresh = dijkstra_plan(*scenario_->map, *models_[agent],
                                             st.cell, scenario_->agents[agent].goal,
                                             dynamic_cells_for(agent), pcfg);
            if (fresh.status == PlanStatus::Ok &&
                fresh.path.total_length + 1e-9 < remaining_guidance_length(agent))
                ctx.current_longer_than_fresh = true;
        }
    }
    return action_mask(ctx, config_.rules);
}

std::vector<ActionMask> Environment::masks() const {
    std::vector<ActionMask> out;
    for (int i = 0; i < num_agents(); ++i) out.push_back(mask(i));
    return out;
}

std::vector<std::pair<int, int>> Environment::conflict_pairs() const {
    std::vector<std::pair<int, int>> pairs;
    double d = scenario_->safety_distance;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        for (std::size_t j = i + 1; j < agents_.size(); ++j) {
            if (agents_[i].done || agents_[j].done) continue;
            auto next_conflicts = [&](int a, int b) {
                const AgentState& sa = agents_[a];
                if (!sa.on_path ||
                    sa.guidance_index + 1 >=
                        static_cast<int>(sa.guidance.waypoints.size()))
                    return false;
                Cell next = sa.guidance.waypoints[sa.guidance_index + 1];
                return check_collision(*models_[a], cell_center(next), *models_[b],
                                       cell_center(agents_[b].cell), d);
            };
            if (next_conflicts(i, j) || next_conflicts(j, i))
                pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    }
    return pairs;
}

JointStep Environment::step(const std::vector<Action>& actions) {
    if (!reset_done_) throw GridError("step before reset");
    if (terminated_) throw GridError("step on terminated episode");
    if (actions.size() != agents_.size())
        throw GridError("wrong number of actions");
    for (std::size_t i = 0; i < agents_.size(); ++i)
        if (agents_[i].done && actions[i] != Action::Wait)
            throw GridError("non-Wait action on a done agent");

    JointStep result;
    result.actions = actions;
    result.rewards.assign(agents_.size(), 0.0);
    result.collision_flags.assign(agents_.size(), 0);
    result.goal_flags.assign(agents_.size(), 0);

    std::vector<uint8_t> active(agents_.size(), 0);
    for (std::size_t i = 0; i < agents_.size(); ++i) active[i] = !agents_[i].done;
    auto pairs = conflict_pairs();

    ++steps_;

    std::vector<Cell> old_cells(agents_.size());
    std::vector<uint8_t> degraded(agents_.size(), 0);
    for (std::size_t i = 0; i < agents_.size(); ++i)
        old_cells[i] = agents_[i].cell;

    // Phase 1: resolve actions into new placements.
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        AgentState& st = agents_[i];
        if (st.done) continue;
        Action a = actions[i];
        switch (a) {
            case Action::Move: {
                bool can = st.on_path &&
                           st.guidance_index + 1 <
                               static_cast<int>(st.guidance.waypoints.size());
                if (!can) {  // off-path Move degrades to Wait
                    ++st.waits;
                    break;
                }
                Cell next = st.guidance.waypoints[st.guidance_index + 1];
                st.history.push_back(st.cell);
                st.moved_length += step_distance(st.cell, next, config_.metric);
                st.cell = next;
                ++st.guidance_index;
                break;
            }
            case Action::Wait:
                ++st.waits;
                break;
            case Action::Back: {
                if (st.history.empty()) {  // no predecessor: degrade to Wait
                    ++st.waits;
                    break;
                }
                Cell prev = st.history.back();
                st.history.pop_back();
                st.moved_length += step_distance(st.cell, prev, config_.metric);
                if (st.on_path && st.guidance_index > 0 &&
                    prev == st.guidance.waypoints[st.guidance_index - 1])
                    --st.guidance_index;
                else
                    st.on_path = false;
                st.cell = prev;
                break;
            }
            case Action::Replan: {
                PlanResult res = planners_[i]->replan(st.cell, dynamic_cells_for(
                                                                   static_cast<int>(i)));
                ReplanRecord rec;
                rec.timestep = steps_;
                rec.planning_time = res.planning_time;
                rec.old_length = remaining_guidance_length(static_cast<int>(i));
                if (res.status == PlanStatus::Ok) {
                    rec.new_length = res.path.total_length;
                    bool differs = res.path.waypoints !=
                                   std::vector<Cell>(st.guidance.waypoints.begin() +
                                                         st.guidance_index,
                                                     st.guidance.waypoints.end());
                    if (differs) {
                        st.guidance = res.path;
                        st.guidance.planned_at = steps_;
                        st.guidance_index = 0;
                        st.on_path = true;
                        rec.adopted = true;
                    }
                } else {
                    // Degrades to staying put; the step already paid its
                    // planning time, so it is not counted as a wait.
                    rec.failed = true;
                    degraded[i] = 1;
                }
                st.replans.push_back(rec);
                break;
            }
        }
        st.last_action = a;
    }

    refresh_covered();

    // Phase 2: pairwise collision checks, including mid-step sweeps so
    // swap conflicts are caught.
    double d = scenario_->safety_distance;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        for (std::size_t j = i + 1; j < agents_.size(); ++j) {
            Vec2 end_i = cell_center(agents_[i].cell);
            Vec2 end_j = cell_center(agents_[j].cell);
            bool hit = check_collision(*models_[i], end_i, *models_[j], end_j, d);
            if (!hit && (agents_[i].cell != old_cells[i] ||
                         agents_[j].cell != old_cells[j])) {
                Vec2 mid_i = 0.5 * (cell_center(old_cells[i]) + end_i);
                Vec2 mid_j = 0.5 * (cell_center(old_cells[j]) + end_j);
                hit = check_collision(*models_[i], mid_i, *models_[j], mid_j, d);
            }
            if (hit) {
                if (active[i]) agents_[i].collided = true;
                if (active[j]) agents_[j].collided = true;
            }
        }
    }

    // Phase 3: rewards.
    bool any_collision = false;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        AgentState& st = agents_[i];
        if (!active[i]) continue;
        if (st.collided) {
            any_collision = true;
            result.collision_flags[i] = 1;
            result.rewards[i] = config_.collision_penalty;
            st.done = true;
        } else if (st.cell == scenario_->agents[i].goal) {
            result.goal_flags[i] = 1;
            result.rewards[i] = config_.goal_reward;
            st.done = true;
        } else {
            double len = config_.remaining_length_cost
                             ? remaining_guidance_length(static_cast<int>(i))
                             : st.initial_guidance_length;
            result.rewards[i] = -1.0 / std::max(len, 1.0);
        }
    }

    result.base_rewards = result.rewards;
    auto penalties = shaping_penalty(actions, pairs, active, config_.rules,
                                     &result.shaping_events);
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (!active[i] || agents_[i].collided) continue;
        result.rewards[i] += penalties[i];
        if (degraded[i] && config_.rules.shaping_enabled)
            result.rewards[i] += config_.rules.rule_penalty;
    }

    double sum = 0.0, base_sum = 0.0;
    for (double r : result.rewards) sum += r;
    for (double r : result.base_rewards) base_sum += r;
    result.shared_reward = sum / static_cast<double>(result.rewards.size());
    result.shared_base_reward =
        base_sum / static_cast<double>(result.base_rewards.size());

    bool all_done = true;
    for (const auto& st : agents_)
        if (!st.done) all_done = false;
    terminated_ = any_collision || all_done || steps_ >= scenario_->step_limit;
    result.terminated = terminated_;
    return result;
}

}  // namespace gridnav
