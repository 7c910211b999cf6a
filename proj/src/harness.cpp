#include "gridnav/harness.hpp"

#include <cctype>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "gridnav/dstar.hpp"

namespace gridnav::bench {

void LearnedPolicy::reset(const Environment& env) {
    hidden_.assign(env.num_agents(), actor_->initial_hidden());
}

std::vector<Action> LearnedPolicy::act(const Environment& env,
                                       const std::vector<Observation>& obs) {
    int n = env.num_agents();
    if (static_cast<int>(hidden_.size()) != n)
        throw std::logic_error("policy not reset for this environment");
    std::vector<Action> actions(n, Action::Wait);
    for (int a = 0; a < n; ++a) {
        if (env.agent(a).done) continue;
        ActionMask mask = env.mask(a);
        std::vector<bool> allowed(kNumActions);
        for (int j = 0; j < kNumActions; ++j)
            allowed[j] = mask.allowed[static_cast<std::size_t>(j)];
        std::vector<double> flat = obs[a].flatten();
        nn::Mat input(1, static_cast<int>(flat.size()));
        input.d = flat;
        nn::Mat logits = actor_->forward(input, hidden_[a]);
        auto probs = nn::masked_probabilities(logits, allowed);
        actions[a] = static_cast<Action>(nn::argmax_index(probs));
    }
    return actions;
}

std::vector<Action> PureReplannerPolicy::act(const Environment& env,
                                             const std::vector<Observation>& obs) {
    (void)obs;
    int n = env.num_agents();
    std::vector<Action> actions(n, Action::Wait);
    for (int a = 0; a < n; ++a) {
        const AgentState& st = env.agent(a);
        if (st.done) continue;
        bool has_next = st.on_path &&
                        st.guidance_index + 1 <
                            static_cast<int>(st.guidance.waypoints.size());
        bool clear = has_next;
        if (clear) {
            // +3 margin: both agents advance each joint step (closing
            // speed 2) and the stop position must stay outside the peer's
            // replan-blocked zone, which reaches one cell past its
            // coverage stamp.
            Cell next = st.guidance.waypoints[st.guidance_index + 1];
            for (int o = 0; o < n && clear; ++o) {
                if (o == a) continue;
                if (check_collision(env.model(a), cell_center(next), env.model(o),
                                    cell_center(env.agent(o).cell),
                                    env.safety_distance() + 3.0))
                    clear = false;
            }
        }
        // A replan yields the planner's best response to the flagged
        // conflict (possibly the unchanged path); follow it for one step
        // before re-checking, otherwise a conservative flag livelocks.
        bool just_replanned = st.last_action == Action::Replan &&
                              !st.replans.empty() && !st.replans.back().failed;
        if (has_next && (clear || just_replanned))
            actions[a] = Action::Move;
        else
            actions[a] = Action::Replan;
    }
    return actions;
}

std::vector<Action> RuleOnlyPolicy::act(const Environment& env,
                                        const std::vector<Observation>& obs) {
    (void)obs;
    int n = env.num_agents();
    std::vector<Action> actions(n, Action::Wait);
    constexpr Action kOrder[] = {Action::Move, Action::Wait, Action::Back,
                                 Action::Replan};
    for (int a = 0; a < n; ++a) {
        if (env.agent(a).done) continue;
        ActionMask mask = env.mask(a);
        for (Action cand : kOrder)
            if (mask.is_allowed(cand)) {
                actions[a] = cand;
                break;
            }
    }
    return actions;
}

EpisodeMetrics run_episode(Policy& policy, const Scenario& scenario,
                           const FootprintLibrary& footprints,
                           const EnvConfig& config, EpisodeTrace* trace,
                           const std::string& case_id) {
    Environment env(scenario, footprints, config);
    std::vector<Observation> obs = env.reset();
    policy.reset(env);
    int n = env.num_agents();

    if (trace) {
        trace->case_id = case_id;
        trace->agent_ids.clear();
        trace->starts.clear();
        trace->goals.clear();
        trace->guidance_lengths.clear();
        trace->steps.clear();
        for (int a = 0; a < n; ++a) {
            trace->agent_ids.push_back(scenario.agents[a].id);
            trace->starts.push_back(scenario.agents[a].start);
            trace->goals.push_back(scenario.agents[a].goal);
            trace->guidance_lengths.push_back(env.agent(a).initial_guidance_length);
        }
    }

    std::vector<int> prev_waits(n, 0);
    std::vector<std::size_t> prev_replans(n, 0);
    while (!env.terminated()) {
        std::vector<Action> actions = policy.act(env, obs);
        env.step(actions);
        if (trace) {
            TraceStep ts;
            ts.actions = actions;
            for (int a = 0; a < n; ++a) {
                const AgentState& st = env.agent(a);
                ts.cells.push_back(st.cell);
                ts.waited.push_back(st.waits > prev_waits[a] ? 1 : 0);
                double pt = 0.0;
                for (std::size_t k = prev_replans[a]; k < st.replans.size(); ++k)
                    pt += st.replans[k].planning_time;
                ts.planning_times.push_back(pt);
                prev_waits[a] = st.waits;
                prev_replans[a] = st.replans.size();
            }
            trace->steps.push_back(std::move(ts));
        }
        if (!env.terminated())
            for (int a = 0; a < n; ++a) obs[a] = env.observe(a);
    }

    EpisodeMetrics m;
    bool ok = true;
    for (int a = 0; a < n; ++a) {
        const AgentState& st = env.agent(a);
        m.added_moving_cost +=
            std::max(0.0, st.moved_length - st.initial_guidance_length);
        for (const auto& rec : st.replans)
            m.planning_cost += rec.planning_time * config.speed;
        m.waiting_cost += st.waits;
        bool reached = st.done && !st.collided && st.cell == scenario.agents[a].goal;
        if (!reached) ok = false;
        if (trace) {
            trace->collided.push_back(st.collided ? 1 : 0);
            trace->reached.push_back(reached ? 1 : 0);
        }
    }
    m.success = ok;
    m.total = m.added_moving_cost + m.planning_cost + m.waiting_cost;
    return m;
}

EpisodeMetrics metrics_from_trace(const EpisodeTrace& trace,
                                  const EnvConfig& config) {
    EpisodeMetrics m;
    int n = static_cast<int>(trace.starts.size());
    for (int a = 0; a < n; ++a) {
        double moved = 0.0;
        Cell prev = trace.starts[a];
        for (const auto& ts : trace.steps) {
            Cell cur = ts.cells[a];
            if (cur != prev) moved += step_distance(prev, cur, config.metric);
            prev = cur;
            m.waiting_cost += ts.waited[a];
            m.planning_cost += ts.planning_times[a] * config.speed;
        }
        m.added_moving_cost += std::max(0.0, moved - trace.guidance_lengths[a]);
    }
    bool ok = !trace.reached.empty();
    for (uint8_t r : trace.reached)
        if (!r) ok = false;
    m.success = ok;
    m.total = m.added_moving_cost + m.planning_cost + m.waiting_cost;
    return m;
}

SuiteReport run_suite(Policy& policy, const std::vector<SuiteCase>& suite,
                      const FootprintLibrary& footprints, const EnvConfig& config,
                      std::vector<EpisodeTrace>* traces) {
    SuiteReport report;
    int successes = 0;
    for (const auto& sc : suite) {
        CaseResult result;
        result.case_id = sc.id;
        EpisodeTrace trace;
        try {
            result.metrics = run_episode(policy, sc.scenario, footprints, config,
                                         &trace, sc.id);
        } catch (const std::exception&) {
            result.metrics = EpisodeMetrics{};  // recorded as failure
            trace = EpisodeTrace{};
            trace.case_id = sc.id;
        }
        if (traces) traces->push_back(std::move(trace));
        report.totals.added_moving_cost += result.metrics.added_moving_cost;
        report.totals.planning_cost += result.metrics.planning_cost;
        report.totals.waiting_cost += result.metrics.waiting_cost;
        report.totals.total += result.metrics.total;
        successes += result.metrics.success ? 1 : 0;
        report.cases.push_back(std::move(result));
    }
    double count = static_cast<double>(report.cases.size());
    if (count > 0) {
        report.means.added_moving_cost = report.totals.added_moving_cost / count;
        report.means.planning_cost = report.totals.planning_cost / count;
        report.means.waiting_cost = report.totals.waiting_cost / count;
        report.means.total = report.totals.total / count;
        report.success_rate = successes / count;
    }
    return report;
}

std::string report_csv(const SuiteReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3);
    out << "case,added,planning,waiting,total,success\n";
    auto row = [&](const std::string& id, const EpisodeMetrics& m,
                   const char* success_field) {
        out << id << ',' << m.added_moving_cost << ',' << m.planning_cost << ','
            << m.waiting_cost << ',' << m.total << ',' << success_field << '\n';
    };
    for (const auto& c : report.cases)
        row(c.case_id, c.metrics, c.metrics.success ? "1" : "0");
    row("total", report.totals, "");
    std::ostringstream rate;
    rate << std::fixed << std::setprecision(3) << report.success_rate;
    row("mean", report.means, rate.str().c_str());
    return out.str();
}

std::shared_ptr<GridMap> generate_map(int rows, int cols, std::mt19937_64& rng) {
    if (rows < 13 || cols < 13)
        throw std::invalid_argument("map too small for a corridor layout");
    std::vector<std::string> canvas(rows, std::string(cols, '@'));

    constexpr int kLane = 5;  // single-lane corridor for a 3x3 footprint
    auto bands = [&](int extent) {
        // Alternating block/corridor bands across [1, extent-1).
        std::vector<std::pair<int, int>> corridors;  // [begin, end)
        int at = 1;
        std::uniform_int_distribution<int> block(5, 8);
        at += block(rng);
        while (at + kLane < extent - 1) {
            corridors.emplace_back(at, at + kLane);
            at += kLane + block(rng);
        }
        if (corridors.empty())
            throw std::invalid_argument("map too small for a corridor layout");
        return corridors;
    };
    auto row_bands = bands(rows);
    auto col_bands = bands(cols);

    for (const auto& [lo, hi] : row_bands)
        for (int r = lo; r < hi; ++r)
            for (int c = 1; c < cols - 1; ++c) canvas[r][c] = '.';
    for (const auto& [lo, hi] : col_bands)
        for (int c = lo; c < hi; ++c)
            for (int r = 1; r < rows - 1; ++r) canvas[r][c] = '.';

    std::ostringstream text;
    text << "type octile\nheight " << rows << "\nwidth " << cols << "\nmap\n";
    for (const auto& line : canvas) text << line << '\n';
    return std::make_shared<GridMap>(parse_map(text.str()));
}

bool guidance_paths_conflict(const std::vector<std::vector<Cell>>& paths,
                             const std::vector<const ConvexPolygon*>& models,
                             double safety_distance) {
    std::size_t ticks = 0;
    for (const auto& p : paths) ticks = std::max(ticks, p.size());
    auto at = [](const std::vector<Cell>& p, std::size_t t) {
        return p[std::min(t, p.size() - 1)];
    };
    for (std::size_t t = 0; t < ticks; ++t)
        for (std::size_t i = 0; i < paths.size(); ++i)
            for (std::size_t j = i + 1; j < paths.size(); ++j)
                if (check_collision(*models[i], cell_center(at(paths[i], t)),
                                    *models[j], cell_center(at(paths[j], t)),
                                    safety_distance))
                    return true;
    return false;
}

namespace {

// Free placement cells for the model on this map, precomputed once.
std::vector<Cell> free_placements(const GridMap& map, const ConvexPolygon& model,
                                  double d) {
    std::vector<Cell> cells;
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c)
            if (!check_static_collision(model, cell_center({r, c}), map, d))
                cells.push_back({r, c});
    return cells;
}

}  // namespace

GeneratedSuite generate_suite(const SuiteGenConfig& config,
                              const FootprintLibrary& footprints,
                              std::uint64_t seed) {
    if (config.n_agents < 2)
        throw std::invalid_argument("suite generation needs at least 2 agents");
    std::mt19937_64 rng(seed);
    const ConvexPolygon& model = footprints.get(config.footprint);

    int want_conflicted = static_cast<int>(
        std::lround(config.target_conflict_rate * config.n_cases));
    int want_free = config.n_cases - want_conflicted;

    PlannerConfig pc;
    pc.connectivity = config.connectivity;
    pc.metric = config.metric;
    pc.safety_distance = config.safety_distance;

    GeneratedSuite suite;
    int conflicted_made = 0, free_made = 0;
    // The step cap must leave room for detours and waits on top of the
    // longest guidance path.
    double max_guidance = config.step_limit * 0.45;

    for (int attempt = 0;
         attempt < config.max_attempts &&
         static_cast<int>(suite.cases.size()) < config.n_cases;
         ++attempt) {
        auto map = generate_map(config.rows, config.cols, rng);
        auto table = build_static_table(*map, model, config.safety_distance);
        auto spots = free_placements(*map, model, config.safety_distance);
        if (spots.size() < 4) continue;
        std::uniform_int_distribution<std::size_t> pick(0, spots.size() - 1);

        Scenario scn;
        scn.map = map.get();
        scn.safety_distance = config.safety_distance;
        scn.step_limit = config.step_limit;
        std::vector<std::vector<Cell>> paths;
        std::vector<const ConvexPolygon*> models;

        // Endpoints keep a margin from the other agents' guidance so a
        // robot parked at (or heading to) its goal never walls in a peer.
        constexpr int kEndpointMargin = 5;
        auto clear_of = [&](Cell endpoint, const std::vector<Cell>& path) {
            for (Cell w : path)
                if (std::max(std::abs(w.row - endpoint.row),
                             std::abs(w.col - endpoint.col)) < kEndpointMargin)
                    return false;
            return true;
        };

        bool ok = true;
        for (int a = 0; a < config.n_agents && ok; ++a) {
            ok = false;
            for (int tries = 0; tries < 60; ++tries) {
                Cell start = spots[pick(rng)];
                Cell goal = spots[pick(rng)];
                if (start == goal) continue;
                bool clash = false;
                for (std::size_t o = 0; o < paths.size(); ++o)
                    if (!clear_of(start, paths[o]) || !clear_of(goal, paths[o]) ||
                        !clear_of(scn.agents[o].start, {start, goal}) ||
                        !clear_of(scn.agents[o].goal, {start, goal}))
                        clash = true;
                if (clash) continue;
                PlanResult res = dijkstra_plan(*map, model, start, goal, {}, pc,
                                               table);
                if (res.status != PlanStatus::Ok) continue;
                if (res.path.total_length > max_guidance) continue;
                bool endpoint_clash = false;
                for (std::size_t o = 0; o < paths.size(); ++o)
                    if (!clear_of(scn.agents[o].start, res.path.waypoints) ||
                        !clear_of(scn.agents[o].goal, res.path.waypoints))
                        endpoint_clash = true;
                if (endpoint_clash) continue;
                AgentSpec spec;
                spec.id = "a" + std::to_string(a + 1);
                spec.footprint = config.footprint;
                spec.start = start;
                spec.goal = goal;
                scn.agents.push_back(spec);
                paths.push_back(res.path.waypoints);
                models.push_back(&model);
                ok = true;
                break;
            }
        }
        if (!ok) continue;

        bool conflicted =
            guidance_paths_conflict(paths, models, config.safety_distance);
        if (conflicted && conflicted_made >= want_conflicted) continue;
        if (!conflicted && free_made >= want_free) continue;

        SuiteCase sc;
        std::ostringstream id;
        id << "case" << std::setfill('0') << std::setw(2)
           << suite.cases.size() + 1;
        sc.id = id.str();
        sc.map = map;
        sc.scenario = std::move(scn);
        sc.conflicted = conflicted;
        suite.cases.push_back(std::move(sc));
        conflicted_made += conflicted ? 1 : 0;
        free_made += conflicted ? 0 : 1;
    }
    if (!suite.cases.empty())
        suite.conflict_rate = static_cast<double>(conflicted_made) /
                              static_cast<double>(suite.cases.size());
    return suite;
}

std::string serialize_trace(const EpisodeTrace& trace) {
    std::ostringstream out;
    out.precision(17);
    int n = static_cast<int>(trace.starts.size());
    out << "trace 1\n";
    out << "case " << (trace.case_id.empty() ? "-" : trace.case_id) << '\n';
    out << "agents " << n << '\n';
    for (int a = 0; a < n; ++a)
        out << trace.agent_ids[a] << ' ' << trace.starts[a].row << ' '
            << trace.starts[a].col << ' ' << trace.goals[a].row << ' '
            << trace.goals[a].col << ' ' << trace.guidance_lengths[a] << ' '
            << int(trace.collided[a]) << ' ' << int(trace.reached[a]) << '\n';
    out << "steps " << trace.steps.size() << '\n';
    for (const auto& ts : trace.steps) {
        for (int a = 0; a < n; ++a) {
            if (a) out << ' ';
            out << action_name(ts.actions[a])[0] << ' ' << ts.cells[a].row << ' '
                << ts.cells[a].col << ' ' << int(ts.waited[a]) << ' '
                << ts.planning_times[a];
        }
        out << '\n';
    }
    return out.str();
}

EpisodeTrace parse_trace(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "trace" || version != 1)
        throw std::runtime_error("not a trace file");
    EpisodeTrace trace;
    int n = 0;
    if (!(in >> word >> trace.case_id) || word != "case")
        throw std::runtime_error("trace: missing case id");
    if (trace.case_id == "-") trace.case_id.clear();
    if (!(in >> word >> n) || word != "agents" || n <= 0)
        throw std::runtime_error("trace: missing agent count");
    for (int a = 0; a < n; ++a) {
        std::string id;
        Cell s{}, g{};
        double len = 0.0;
        int collided = 0, reached = 0;
        if (!(in >> id >> s.row >> s.col >> g.row >> g.col >> len >> collided >>
              reached))
            throw std::runtime_error("trace: malformed agent line");
        trace.agent_ids.push_back(id);
        trace.starts.push_back(s);
        trace.goals.push_back(g);
        trace.guidance_lengths.push_back(len);
        trace.collided.push_back(static_cast<uint8_t>(collided));
        trace.reached.push_back(static_cast<uint8_t>(reached));
    }
    std::size_t steps = 0;
    if (!(in >> word >> steps) || word != "steps")
        throw std::runtime_error("trace: missing step count");
    for (std::size_t t = 0; t < steps; ++t) {
        TraceStep ts;
        for (int a = 0; a < n; ++a) {
            char act = 0;
            Cell c{};
            int waited = 0;
            double pt = 0.0;
            if (!(in >> act >> c.row >> c.col >> waited >> pt))
                throw std::runtime_error("trace: malformed step line");
            Action action;
            switch (std::toupper(static_cast<unsigned char>(act))) {
                case 'M': action = Action::Move; break;
                case 'W': action = Action::Wait; break;
                case 'B': action = Action::Back; break;
                case 'R': action = Action::Replan; break;
                default: throw std::runtime_error("trace: unknown action");
            }
            ts.actions.push_back(action);
            ts.cells.push_back(c);
            ts.waited.push_back(static_cast<uint8_t>(waited));
            ts.planning_times.push_back(pt);
        }
        trace.steps.push_back(std::move(ts));
    }
    return trace;
}

std::string render_trace(const EpisodeTrace& trace, const GridMap& map) {
    std::ostringstream out;
    int n = static_cast<int>(trace.starts.size());
    auto frame = [&](const std::string& title, const std::vector<Cell>& cells) {
        out << title << '\n';
        for (int r = 0; r < map.height(); ++r) {
            std::string line;
            for (int c = 0; c < map.width(); ++c)
                line += map.blocked({r, c}) ? '@' : '.';
            for (int a = 0; a < n; ++a) {
                if (trace.goals[a].row == r) line[trace.goals[a].col] = 'g';
            }
            for (int a = 0; a < n; ++a)
                if (cells[a].row == r)
                    line[cells[a].col] = static_cast<char>('1' + a);
            out << line << '\n';
        }
        out << '\n';
    };
    frame("start", trace.starts);
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        std::ostringstream title;
        title << "step " << t + 1 << ':';
        for (int a = 0; a < n; ++a)
            title << ' ' << trace.agent_ids[a] << '='
                  << action_name(trace.steps[t].actions[a]);
        frame(title.str(), trace.steps[t].cells);
    }
    for (int a = 0; a < n; ++a)
        out << trace.agent_ids[a] << ": "
            << (trace.collided.size() > std::size_t(a) && trace.collided[a]
                    ? "collided"
                : trace.reached.size() > std::size_t(a) && trace.reached[a]
                    ? "reached goal"
                    : "did not finish")
            << '\n';
    return out.str();
}

}  // namespace gridnav::bench
