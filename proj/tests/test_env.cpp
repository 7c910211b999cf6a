#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gridnav/env.hpp"
#include "helpers.hpp"

using namespace gridnav;

namespace {

const char* kOpen8 =
    "type octile\nheight 8\nwidth 8\nmap\n"
    "........\n........\n........\n........\n"
    "........\n........\n........\n........\n";

EnvConfig det_cfg() {
    EnvConfig cfg;
    cfg.deterministic_timing = true;
    return cfg;
}

double shared_return(Environment& env, const std::vector<std::vector<Action>>& script,
                     std::vector<JointStep>* steps = nullptr) {
    env.reset();
    double total = 0.0;
    for (const auto& acts : script) {
        JointStep js = env.step(acts);
        total += js.shared_reward;
        if (steps) steps->push_back(js);
    }
    return total;
}

}  // namespace

TEST_CASE("observation and critic input dimensions for two agents") {
    EnvConfig cfg;
    CHECK(cfg.lookahead == 23);
    CHECK(cfg.observation_dim(2) == 71);  // 1 + 1 + 3*23
    CHECK(cfg.critic_input_dim(2) == 145);  // 2*71 + 2 + 1
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 1 1 1 4\nb square1 6 1 6 4\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    auto obs = env.reset();
    REQUIRE(obs.size() == 2);
    CHECK(obs[0].flatten().size() == 71);
    CHECK(obs[1].flatten().size() == 71);
}

TEST_CASE("scripted episode: both agents reach their goals") {
    // guidance length 3 each; step cost is -1/remaining after the step
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 1 1 1 4\nb square1 6 1 6 4\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    std::vector<JointStep> steps;
    double ret = shared_return(env,
                               {{Action::Move, Action::Move},
                                {Action::Move, Action::Move},
                                {Action::Move, Action::Move}},
                               &steps);
    // hand-computed: -1/2, -1/1, +200 for both agents
    CHECK(steps[0].shared_reward == -0.5);
    CHECK(steps[1].shared_reward == -1.0);
    CHECK(steps[2].shared_reward == 200.0);
    CHECK(ret == 198.5);
    CHECK(steps[2].terminated);
    CHECK(steps[2].goal_flags == std::vector<uint8_t>{1, 1});
    CHECK(env.agent(0).done);
    CHECK(env.agent(1).done);
    CHECK(env.agent(0).moved_length == 3.0);
    CHECK(env.agent(0).waits == 0);
}

TEST_CASE("scripted episode: head-on crash pays the collision penalty") {
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 3 1 3 6\nb square1 3 6 3 1\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    std::vector<JointStep> steps;
    double ret = shared_return(env,
                               {{Action::Move, Action::Move},
                                {Action::Move, Action::Move}},
                               &steps);
    // hand-computed: -1/4 each, then -100 each on the touching placements
    CHECK(steps[0].shared_reward == -0.25);
    CHECK(steps[1].shared_reward == -100.0);
    CHECK(ret == -100.25);
    CHECK(steps[1].terminated);
    CHECK(steps[1].collision_flags == std::vector<uint8_t>{1, 1});
    CHECK(env.agent(0).collided);
}

TEST_CASE("scripted episode: joint wait is shaped, base rewards are not") {
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 1 1 1 3\nb square1 6 1 6 3\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    std::vector<JointStep> steps;
    double ret = shared_return(env,
                               {{Action::Wait, Action::Wait},
                                {Action::Move, Action::Move},
                                {Action::Move, Action::Move}},
                               &steps);
    // hand-computed: (-1/2 - 5), -1, +200 shared; base skips the -5
    CHECK(steps[0].shared_reward == -5.5);
    CHECK(steps[0].shared_base_reward == -0.5);
    REQUIRE(steps[0].shaping_events.size() == 1);
    CHECK(steps[0].shaping_events[0].kind == ShapingEvent::Kind::AllWait);
    CHECK(steps[1].shared_reward == -1.0);
    CHECK(steps[2].shared_reward == 200.0);
    CHECK(ret == 193.5);
    CHECK(env.agent(0).waits == 1);

    // shaping off: same script, no penalty anywhere
    EnvConfig plain = det_cfg();
    plain.rules.shaping_enabled = false;
    Environment env2(s, oracle::lib(), plain);
    std::vector<JointStep> steps2;
    double ret2 = shared_return(env2,
                                {{Action::Wait, Action::Wait},
                                 {Action::Move, Action::Move},
                                 {Action::Move, Action::Move}},
                                &steps2);
    CHECK(steps2[0].shared_reward == -0.5);
    CHECK(ret2 == 198.5);
}

TEST_CASE("goal-distance observation tracks remaining guidance") {
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 1 1 1 4\nb square1 6 1 6 4\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    auto obs = env.reset();
    CHECK(obs[0].goal_distance == doctest::Approx(1.0));
    env.step({Action::Move, Action::Move});
    CHECK(env.observe(0).goal_distance == doctest::Approx(2.0 / 3.0));
    env.step({Action::Move, Action::Move});
    CHECK(env.observe(0).goal_distance == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("path occupancy marks conflicting guidance placements") {
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 3 1 3 6\nb square1 3 6 3 1\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    auto obs = env.reset();
    // waypoints (3,2)..(3,6); (3,5) touches and (3,6) overlaps the peer
    CHECK(obs[0].path_occupancy[0] == 0);
    CHECK(obs[0].path_occupancy[2] == 0);
    CHECK(obs[0].path_occupancy[3] == 1);
    CHECK(obs[0].path_occupancy[4] == 1);
    // mask: conflict deep in the window disables the forced-move rule but
    // allows moving; Back impossible before any history
    ActionMask m = env.mask(0);
    CHECK(m.is_allowed(Action::Move));
    CHECK(m.is_allowed(Action::Wait));
    CHECK(!m.is_allowed(Action::Back));
    CHECK(m.is_allowed(Action::Replan));
}

TEST_CASE("back action retraces history and restores the guidance index") {
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 1 1 1 4\nb square1 6 1 6 4\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    env.reset();
    env.step({Action::Move, Action::Wait});
    CHECK(env.agent(0).cell == Cell{1, 2});
    CHECK(env.agent(0).guidance_index == 1);
    env.step({Action::Back, Action::Wait});
    CHECK(env.agent(0).cell == Cell{1, 1});
    CHECK(env.agent(0).guidance_index == 0);
    CHECK(env.agent(0).on_path);
    CHECK(env.agent(0).moved_length == 2.0);  // both directions count
    // back with empty history degrades to a wait
    int waits_before = env.agent(0).waits;
    env.step({Action::Back, Action::Wait});
    CHECK(env.agent(0).cell == Cell{1, 1});
    CHECK(env.agent(0).waits == waits_before + 1);
}

TEST_CASE("replan adopts a detour around a parked agent") {
    GridMap map = parse_map(kOpen8);
    // b starts at its goal, parked right on a's straight line
    Scenario s = parse_scenario("a square1 2 1 2 6\nb square1 2 4 2 4\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    env.reset();
    CHECK(env.agent(1).done);
    CHECK(env.agent(0).guidance.total_length == 5.0);  // static-only plan
    JointStep js = env.step({Action::Replan, Action::Wait});
    REQUIRE(env.agent(0).replans.size() == 1);
    const ReplanRecord& rec = env.agent(0).replans[0];
    CHECK(rec.adopted);
    CHECK(!rec.failed);
    CHECK(rec.new_length > 5.0);
    CHECK(rec.planning_time > 0.0);
    CHECK(env.agent(0).on_path);
    // the new guidance keeps clear of the parked footprint
    for (Cell c : env.agent(0).guidance.waypoints)
        CHECK(!check_collision(env.model(0), cell_center(c), env.model(1),
                               cell_center(Cell{2, 4}), 0.0));
    (void)js;
}

TEST_CASE("episode terminates at the step limit") {
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 1 1 1 6\nb square1 6 1 6 6\n", map,
                                oracle::lib(), 0.0, 3);
    Environment env(s, oracle::lib(), det_cfg());
    env.reset();
    env.step({Action::Wait, Action::Wait});
    env.step({Action::Wait, Action::Wait});
    JointStep js = env.step({Action::Wait, Action::Wait});
    CHECK(js.terminated);
    CHECK(env.terminated());
    CHECK(!env.agent(0).done);
    CHECK_THROWS_AS(env.step({Action::Wait, Action::Wait}), GridError);
}

TEST_CASE("environment rejects bad usage") {
    GridMap map = parse_map(kOpen8);
    Scenario s = parse_scenario("a square1 1 1 1 4\nb square1 6 1 6 4\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    CHECK_THROWS_AS(env.step({Action::Wait, Action::Wait}), GridError);
    env.reset();
    CHECK_THROWS_AS(env.step({Action::Wait}), GridError);
    // drive agent 0 to its goal, then issue a non-Wait action on it
    env.step({Action::Move, Action::Wait});
    env.step({Action::Move, Action::Wait});
    env.step({Action::Move, Action::Wait});
    CHECK(env.agent(0).done);
    CHECK_THROWS_AS(env.step({Action::Move, Action::Move}), GridError);
    // done agents are confined to Wait by rule 1 regardless of masking
    ActionMask m = env.mask(0);
    CHECK(m.count() == 1);
    CHECK(m.is_allowed(Action::Wait));
}

TEST_CASE("swap conflict is caught by the mid-step sweep") {
    GridMap map = parse_map(kOpen8);
    // adjacent starts two cells apart swapping straight through each other
    Scenario s = parse_scenario("a square1 5 2 5 4\nb square1 5 4 5 2\n", map,
                                oracle::lib(), 0.0, 60);
    Environment env(s, oracle::lib(), det_cfg());
    env.reset();
    JointStep js = env.step({Action::Move, Action::Move});
    CHECK(js.collision_flags == std::vector<uint8_t>{1, 1});
    CHECK(js.terminated);
}
