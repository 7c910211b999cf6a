#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gridnav/env.hpp"
#include "gridnav/nets.hpp"

namespace gridnav::bench {

struct EpisodeMetrics {
    double added_moving_cost = 0.0;  // actual moved length minus guidance length
    double planning_cost = 0.0;      // sum of T_p x v over replans
    double waiting_cost = 0.0;       // wait count
    double total = 0.0;
    bool success = false;
};

struct TraceStep {
    std::vector<Action> actions;  // as issued by the policy
    std::vector<Cell> cells;      // placements after the step
    std::vector<uint8_t> waited;  // step counted as a wait (incl. degraded)
    std::vector<double> planning_times;  // per agent, 0 unless it replanned
};

struct EpisodeTrace {
    std::string case_id;
    std::vector<std::string> agent_ids;
    std::vector<Cell> starts;
    std::vector<Cell> goals;
    std::vector<double> guidance_lengths;  // initial global guidance
    std::vector<TraceStep> steps;
    std::vector<uint8_t> collided;
    std::vector<uint8_t> reached;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual void reset(const Environment& env) { (void)env; }
    virtual std::vector<Action> act(const Environment& env,
                                    const std::vector<Observation>& obs) = 0;
};

// Greedy masked argmax over the actor's logits; recurrent state per agent.
class LearnedPolicy : public Policy {
public:
    explicit LearnedPolicy(const nn::Network* actor) : actor_(actor) {}
    void reset(const Environment& env) override;
    std::vector<Action> act(const Environment& env,
                            const std::vector<Observation>& obs) override;

private:
    const nn::Network* actor_;
    std::vector<nn::Mat> hidden_;
};

// Incremental-replanner baseline: Move while the next guidance step is
// clear, Replan otherwise; never Wait or Back while active.
class PureReplannerPolicy : public Policy {
public:
    std::vector<Action> act(const Environment& env,
                            const std::vector<Observation>& obs) override;
};

// Highest-priority allowed action (Move > Wait > Back > Replan).
class RuleOnlyPolicy : public Policy {
public:
    std::vector<Action> act(const Environment& env,
                            const std::vector<Observation>& obs) override;
};

EpisodeMetrics run_episode(Policy& policy, const Scenario& scenario,
                           const FootprintLibrary& footprints,
                           const EnvConfig& config, EpisodeTrace* trace = nullptr,
                           const std::string& case_id = "");

// Re-derives the metrics from a saved trace; equals the live computation.
EpisodeMetrics metrics_from_trace(const EpisodeTrace& trace,
                                  const EnvConfig& config);

struct CaseResult {
    std::string case_id;
    EpisodeMetrics metrics;
};

struct SuiteReport {
    std::vector<CaseResult> cases;
    EpisodeMetrics totals;
    EpisodeMetrics means;
    double success_rate = 0.0;
};

struct SuiteCase {
    std::string id;
    std::shared_ptr<GridMap> map;  // owns the grid the scenario points into
    Scenario scenario;
    bool conflicted = false;  // guidance paths collide under naive traversal
};

SuiteReport run_suite(Policy& policy, const std::vector<SuiteCase>& suite,
                      const FootprintLibrary& footprints, const EnvConfig& config,
                      std::vector<EpisodeTrace>* traces = nullptr);

// Case rows plus totals/means/success-rate footer.
std::string report_csv(const SuiteReport& report);

struct SuiteGenConfig {
    int rows = 40;
    int cols = 60;
    int n_cases = 10;
    int n_agents = 2;
    double target_conflict_rate = 0.9;
    std::string footprint = "square3";
    double safety_distance = 0.5;
    int step_limit = 60;
    int max_attempts = 4000;
    Connectivity connectivity = Connectivity::Four;
    Metric metric = Metric::Euclidean;
};

struct GeneratedSuite {
    std::vector<SuiteCase> cases;
    double conflict_rate = 0.0;  // achieved
};

// Walled map with rectangular blocks separated by single-lane corridors.
std::shared_ptr<GridMap> generate_map(int rows, int cols, std::mt19937_64& rng);

// Naive simultaneous traversal of the static guidance paths: one waypoint
// per tick, holding the last; true if any tick collides at distance d.
bool guidance_paths_conflict(const std::vector<std::vector<Cell>>& paths,
                             const std::vector<const ConvexPolygon*>& models,
                             double safety_distance);

GeneratedSuite generate_suite(const SuiteGenConfig& config,
                              const FootprintLibrary& footprints,
                              std::uint64_t seed);

std::string serialize_trace(const EpisodeTrace& trace);
EpisodeTrace parse_trace(const std::string& text);

// Step-by-step text frames: agents as digits over the map, goals as 'g'.
std::string render_trace(const EpisodeTrace& trace, const GridMap& map);

}  // namespace gridnav::bench
