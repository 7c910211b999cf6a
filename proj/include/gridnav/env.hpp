#pragma once

#include <memory>
#include <unordered_set>
#include <vector>

#include "gridnav/dstar.hpp"
#include "gridnav/rules.hpp"

namespace gridnav {

struct EnvConfig {
    Connectivity connectivity = Connectivity::Four;
    Metric metric = Metric::Euclidean;
    int lookahead = 23;  // n: guidance steps scanned for conflicts
    double goal_reward = 200.0;
    double collision_penalty = -100.0;
    // Step cost is -1/L. Default: L = remaining guidance length; with the
    // switch off, L = initial guidance length (constant dense cost).
    bool remaining_length_cost = true;
    RuleConfig rules;
    double replan_budget_seconds = 3.0;
    bool deterministic_timing = false;
    double seconds_per_expansion = 1e-3;
    double speed = 1.0;  // cells per second, converts T_p to moving cost

    int observation_dim(int n_agents) const {
        return 1 + (n_agents - 1) + 3 * lookahead;
    }
    int critic_input_dim(int n_agents) const {
        return n_agents * observation_dim(n_agents) + n_agents + (n_agents - 1);
    }
};

struct Observation {
    double goal_distance = 0.0;            // o^g, normalized
    std::vector<double> agent_distances;   // o^d, normalized, N-1 entries
    std::vector<uint8_t> path_occupancy;   // o^p, n flags (1-indexed steps)
    std::vector<uint8_t> lateral_occupancy;  // o^n, 2n flags (left then right)

    std::vector<double> flatten() const;
};

struct ReplanRecord {
    int timestep = 0;
    double planning_time = 0.0;
    double old_length = 0.0;
    double new_length = 0.0;
    bool adopted = false;
    bool failed = false;  // timeout or unreachable, degraded to Wait
};

struct AgentState {
    Cell cell;
    std::vector<Cell> history;  // previously visited cells, top = previous
    GuidancePath guidance;
    int guidance_index = 0;
    bool on_path = true;
    double initial_guidance_length = 0.0;
    bool done = false;
    bool collided = false;
    int waits = 0;
    double moved_length = 0.0;
    Action last_action = Action::Wait;
    std::vector<ReplanRecord> replans;
};

struct JointStep {
    std::vector<Action> actions;
    std::vector<double> rewards;
    double shared_reward = 0.0;
    // Same rewards without shaping penalties, comparable across rule setups.
    std::vector<double> base_rewards;
    double shared_base_reward = 0.0;
    bool terminated = false;
    std::vector<uint8_t> collision_flags;
    std::vector<uint8_t> goal_flags;
    std::vector<ShapingEvent> shaping_events;
};

// Joint-stepping partially observable environment over one scenario.
// Phases per step: act -> resolve -> collision check -> reward.
class Environment {
public:
    Environment(const Scenario& scenario, const FootprintLibrary& footprints,
                EnvConfig config);

    // Plans every agent's global guidance against static obstacles only.
    // Throws GridError if any agent is walled off.
    std::vector<Observation> reset();

    JointStep step(const std::vector<Action>& actions);

    Observation observe(int agent) const;
    ActionMask mask(int agent) const;
    std::vector<ActionMask> masks() const;

    int num_agents() const { return static_cast<int>(agents_.size()); }
    int steps() const { return steps_; }
    bool terminated() const { return terminated_; }
    const AgentState& agent(int i) const { return agents_[i]; }
    const EnvConfig& config() const { return config_; }
    const Scenario& scenario() const { return *scenario_; }
    const GridMap& map() const { return *scenario_->map; }
    const ConvexPolygon& model(int i) const { return *models_[i]; }
    double safety_distance() const { return scenario_->safety_distance; }

    double remaining_guidance_length(int agent) const;
    std::vector<std::pair<int, int>> conflict_pairs() const;

private:
    bool placement_conflicts(int agent, Cell at) const;
    void refresh_covered();
    std::vector<Cell> dynamic_cells_for(int agent) const;

    const Scenario* scenario_;
    EnvConfig config_;
    std::vector<const ConvexPolygon*> models_;
    std::vector<std::unique_ptr<DStarPlanner>> planners_;
    std::vector<AgentState> agents_;
    std::vector<std::unordered_set<int>> covered_;  // cell indices per agent
    int steps_ = 0;
    bool terminated_ = false;
    bool reset_done_ = false;
};

}  // namespace gridnav
