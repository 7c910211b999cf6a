#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace gridnav {

enum class Action : int { Move = 0, Wait = 1, Back = 2, Replan = 3 };

constexpr int kNumActions = 4;

const char* action_name(Action a);

struct ActionMask {
    std::array<bool, kNumActions> allowed{true, true, true, true};

    bool is_allowed(Action a) const { return allowed[static_cast<int>(a)]; }
    void forbid(Action a) { allowed[static_cast<int>(a)] = false; }
    void only(Action a) {
        allowed = {false, false, false, false};
        allowed[static_cast<int>(a)] = true;
    }
    int count() const {
        int n = 0;
        for (bool b : allowed) n += b;
        return n;
    }
};

struct RuleConfig {
    bool mask_enabled = true;     // action-masking rules 1..6
    bool shaping_enabled = true;  // joint-action penalty rules
    double rule_penalty = -5.0;
};

// Everything the masking rules look at, assembled by the environment so
// the rules stay pure functions.
struct RuleContext {
    bool done = false;
    bool collided = false;
    bool move_available = false;  // on the guidance path with a next waypoint
    bool back_available = false;  // history non-empty
    bool all_others_done = false;
    bool conflict_within_lookahead = false;  // any path-occupancy flag set
    bool next_step_conflict = false;         // first path-occupancy flag
    bool prev_action_back = false;
    bool all_others_waited = false;  // every active other chose Wait last step
    bool current_longer_than_fresh = false;  // fresh replan is strictly shorter
};

// Rules applied in listed priority order; a forcing rule decides the mask
// outright. Wait is always the fallback, so the mask is never empty.
ActionMask action_mask(const RuleContext& ctx, const RuleConfig& config);

struct ShapingEvent {
    enum class Kind { AllWait, AllReplan, MixedConflictReplan };
    Kind kind;
    std::vector<int> agents;
    double penalty = 0.0;
};

// Per-agent penalties for the three joint-action conditions. `active`
// marks agents that were not done at decision time; conflict_pairs holds
// index pairs at next-step collision risk.
std::vector<double> shaping_penalty(const std::vector<Action>& actions,
                                    const std::vector<std::pair<int, int>>& conflict_pairs,
                                    const std::vector<uint8_t>& active,
                                    const RuleConfig& config,
                                    std::vector<ShapingEvent>* events = nullptr);

}  // namespace gridnav
