#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gridnav/harness.hpp"
#include "gridnav/ppo.hpp"

namespace py = pybind11;
using namespace gridnav;

namespace {

// Scenario keeps a raw pointer into its map, so the binding bundles both.
struct PyScenario {
    std::shared_ptr<GridMap> map;
    Scenario scenario;
};

std::pair<int, int> to_pair(Cell c) { return {c.row, c.col}; }

Cell to_cell(std::pair<int, int> rc) { return {rc.first, rc.second}; }

}  // namespace

PYBIND11_MODULE(_gridnav, m) {
    m.doc() = "footprint-aware multi-robot grid navigation toolkit";

    py::class_<GridMap, std::shared_ptr<GridMap>>(m, "GridMap")
        .def_property_readonly("height", &GridMap::height)
        .def_property_readonly("width", &GridMap::width)
        .def("blocked",
             [](const GridMap& g, int row, int col) {
                 return g.blocked({row, col});
             })
        .def("free", [](const GridMap& g, int row, int col) {
            return g.free({row, col});
        });

    m.def("parse_map",
          [](const std::string& text) {
              return std::make_shared<GridMap>(parse_map(text));
          });
    m.def("serialize_map",
          [](const std::shared_ptr<GridMap>& map) { return serialize_map(*map); });

    py::class_<ConvexPolygon>(m, "ConvexPolygon")
        .def_static("from_vertices",
                    [](const std::vector<std::pair<double, double>>& pts) {
                        std::vector<Vec2> v;
                        for (auto [x, y] : pts) v.push_back({x, y});
                        return ConvexPolygon::from_vertices(v);
                    });

    py::class_<FootprintLibrary>(m, "FootprintLibrary")
        .def_static("builtin", &FootprintLibrary::builtin)
        .def_static("parse", &FootprintLibrary::parse)
        .def("names", &FootprintLibrary::names)
        .def("get", &FootprintLibrary::get, py::return_value_policy::reference);

    m.def("covered_cells",
          [](const ConvexPolygon& poly, std::pair<int, int> anchor, int height,
             int width) {
              std::vector<std::pair<int, int>> out;
              for (Cell c : covered_cells(poly, to_cell(anchor), height, width))
                  out.push_back(to_pair(c));
              return out;
          });
    m.def("check_collision",
          [](const ConvexPolygon& a, std::pair<double, double> oa,
             const ConvexPolygon& b, std::pair<double, double> ob, double d) {
              return check_collision(a, {oa.first, oa.second}, b,
                                     {ob.first, ob.second}, d);
          });
    m.def("check_static_collision",
          [](const ConvexPolygon& poly, std::pair<double, double> offset,
             const std::shared_ptr<GridMap>& map, double d) {
              return check_static_collision(poly, {offset.first, offset.second},
                                            *map, d);
          });

    py::class_<PyScenario>(m, "Scenario")
        .def_property_readonly("num_agents",
                               [](const PyScenario& s) {
                                   return s.scenario.agents.size();
                               })
        .def_property_readonly("map",
                               [](const PyScenario& s) { return s.map; })
        .def("agent",
             [](const PyScenario& s, int i) {
                 const AgentSpec& a = s.scenario.agents.at(i);
                 return py::make_tuple(a.id, a.footprint, to_pair(a.start),
                                       to_pair(a.goal));
             })
        .def("serialize",
             [](const PyScenario& s) { return serialize_scenario(s.scenario); });

    m.def("parse_scenario",
          [](const std::string& text, const std::shared_ptr<GridMap>& map,
             const FootprintLibrary& lib, double d, int step_limit) {
              PyScenario s;
              s.map = map;
              s.scenario = parse_scenario(text, *map, lib, d, step_limit);
              return s;
          },
          py::arg("text"), py::arg("map"), py::arg("footprints"),
          py::arg("safety_distance"), py::arg("step_limit") = 60);

    m.def("plan",
          [](const std::shared_ptr<GridMap>& map, const ConvexPolygon& model,
             std::pair<int, int> start, std::pair<int, int> goal, double d,
             const std::vector<std::pair<int, int>>& dynamic_cells) {
              PlannerConfig pc;
              pc.safety_distance = d;
              std::vector<Cell> dyn;
              for (auto rc : dynamic_cells) dyn.push_back(to_cell(rc));
              PlanResult r = dijkstra_plan(*map, model, to_cell(start),
                                           to_cell(goal), dyn, pc);
              std::vector<std::pair<int, int>> waypoints;
              for (Cell c : r.path.waypoints) waypoints.push_back(to_pair(c));
              return py::make_tuple(r.status == PlanStatus::Ok, waypoints,
                                    r.path.total_length);
          },
          py::arg("map"), py::arg("model"), py::arg("start"), py::arg("goal"),
          py::arg("safety_distance") = 0.0,
          py::arg("dynamic_cells") = std::vector<std::pair<int, int>>{});

    py::class_<DStarPlanner>(m, "DStarPlanner")
        .def(py::init([](const std::shared_ptr<GridMap>& map,
                         const ConvexPolygon& model, std::pair<int, int> goal,
                         double d) {
                 PlannerConfig pc;
                 pc.safety_distance = d;
                 return new DStarPlanner(*map, model, to_cell(goal), pc);
             }),
             py::keep_alive<1, 2>(), py::keep_alive<1, 3>())
        .def("plan",
             [](DStarPlanner& p, std::pair<int, int> start) {
                 PlanResult r = p.plan(to_cell(start));
                 std::vector<std::pair<int, int>> waypoints;
                 for (Cell c : r.path.waypoints) waypoints.push_back(to_pair(c));
                 return py::make_tuple(r.status == PlanStatus::Ok, waypoints,
                                       r.path.total_length);
             })
        .def("replan",
             [](DStarPlanner& p, std::pair<int, int> start,
                const std::vector<std::pair<int, int>>& dynamic_cells) {
                 std::vector<Cell> dyn;
                 for (auto rc : dynamic_cells) dyn.push_back(to_cell(rc));
                 PlanResult r = p.replan(to_cell(start), dyn);
                 std::vector<std::pair<int, int>> waypoints;
                 for (Cell c : r.path.waypoints) waypoints.push_back(to_pair(c));
                 return py::make_tuple(r.status == PlanStatus::Ok, waypoints,
                                       r.path.total_length);
             });

    py::enum_<Action>(m, "Action")
        .value("MOVE", Action::Move)
        .value("WAIT", Action::Wait)
        .value("BACK", Action::Back)
        .value("REPLAN", Action::Replan);

    py::class_<EnvConfig>(m, "EnvConfig")
        .def(py::init<>())
        .def_readwrite("lookahead", &EnvConfig::lookahead)
        .def_readwrite("goal_reward", &EnvConfig::goal_reward)
        .def_readwrite("collision_penalty", &EnvConfig::collision_penalty)
        .def_readwrite("deterministic_timing", &EnvConfig::deterministic_timing)
        .def_property(
            "rules_enabled",
            [](const EnvConfig& c) { return c.rules.mask_enabled; },
            [](EnvConfig& c, bool v) {
                c.rules.mask_enabled = v;
                c.rules.shaping_enabled = v;
            })
        .def("observation_dim", &EnvConfig::observation_dim)
        .def("critic_input_dim", &EnvConfig::critic_input_dim);

    py::class_<Environment>(m, "Environment")
        .def(py::init([](const PyScenario& s, const FootprintLibrary& lib,
                         const EnvConfig& cfg) {
                 return new Environment(s.scenario, lib, cfg);
             }),
             py::keep_alive<1, 2>(), py::keep_alive<1, 3>())
        .def("reset",
             [](Environment& env) {
                 std::vector<std::vector<double>> out;
                 for (const auto& o : env.reset()) out.push_back(o.flatten());
                 return out;
             })
        .def("step",
             [](Environment& env, const std::vector<Action>& actions) {
                 JointStep js = env.step(actions);
                 py::dict out;
                 out["rewards"] = js.rewards;
                 out["shared_reward"] = js.shared_reward;
                 out["base_rewards"] = js.base_rewards;
                 out["terminated"] = js.terminated;
                 out["collisions"] = js.collision_flags;
                 out["goals"] = js.goal_flags;
                 return out;
             })
        .def("observe",
             [](const Environment& env, int agent) {
                 return env.observe(agent).flatten();
             })
        .def("mask",
             [](const Environment& env, int agent) {
                 ActionMask mask = env.mask(agent);
                 std::vector<bool> allowed(kNumActions);
                 for (int j = 0; j < kNumActions; ++j)
                     allowed[j] = mask.allowed[static_cast<std::size_t>(j)];
                 return allowed;
             })
        .def_property_readonly("num_agents", &Environment::num_agents)
        .def_property_readonly("terminated", &Environment::terminated)
        .def("position", [](const Environment& env, int agent) {
            return to_pair(env.agent(agent).cell);
        });

    m.def("generate_suite",
          [](int rows, int cols, int n_cases, double conflict_rate,
             std::uint64_t seed) {
              bench::SuiteGenConfig cfg;
              cfg.rows = rows;
              cfg.cols = cols;
              cfg.n_cases = n_cases;
              cfg.target_conflict_rate = conflict_rate;
              auto lib = FootprintLibrary::builtin();
              auto suite = bench::generate_suite(cfg, lib, seed);
              std::vector<PyScenario> out;
              for (auto& sc : suite.cases) out.push_back({sc.map, sc.scenario});
              return py::make_tuple(out, suite.conflict_rate);
          },
          py::arg("rows") = 40, py::arg("cols") = 60, py::arg("n_cases") = 10,
          py::arg("conflict_rate") = 0.9, py::arg("seed") = 1);

    m.def("run_baseline",
          [](const PyScenario& s, bool deterministic_timing) {
              auto lib = FootprintLibrary::builtin();
              EnvConfig cfg;
              cfg.deterministic_timing = deterministic_timing;
              bench::PureReplannerPolicy policy;
              bench::EpisodeMetrics metrics =
                  bench::run_episode(policy, s.scenario, lib, cfg);
              py::dict out;
              out["added"] = metrics.added_moving_cost;
              out["planning"] = metrics.planning_cost;
              out["waiting"] = metrics.waiting_cost;
              out["total"] = metrics.total;
              out["success"] = metrics.success;
              return out;
          },
          py::arg("scenario"), py::arg("deterministic_timing") = true);
}
