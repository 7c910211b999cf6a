#include "gridnav/rules.hpp"

namespace gridnav {

const char* action_name(Action a) {
    switch (a) {
        case Action::Move: return "move";
        case Action::Wait: return "wait";
        case Action::Back: return "back";
        case Action::Replan: return "replan";
    }
    return "?";
}

ActionMask action_mask(const RuleContext& ctx, const RuleConfig& config) {
    ActionMask mask;

    // Rule 1 applies even with masking disabled: finished or crashed
    // agents hold position.
    if (ctx.done || ctx.collided) {
        mask.only(Action::Wait);
        return mask;
    }
    if (!config.mask_enabled) return mask;

    if (!ctx.move_available) mask.forbid(Action::Move);
    if (!ctx.back_available) mask.forbid(Action::Back);

    // Rule 2: everyone else is parked at their goal; head home on the
    // better of the current path and a fresh replan.
    if (ctx.all_others_done) {
        if (ctx.current_longer_than_fresh) {
            mask.only(Action::Replan);
        } else if (ctx.move_available && !ctx.next_step_conflict) {
            mask.only(Action::Move);
        } else {
            mask = ActionMask{};
            mask.forbid(Action::Move);
            mask.forbid(Action::Back);
        }
        return mask;
    }

    // Rule 3: clear lookahead, follow the guidance.
    if (!ctx.conflict_within_lookahead && ctx.move_available) {
        mask.only(Action::Move);
        return mask;
    }

    // Rule 4: imminent conflict forbids moving forward.
    if (ctx.next_step_conflict) mask.forbid(Action::Move);

    // Rule 5: no back-and-forth oscillation while the conflict persists.
    if (ctx.prev_action_back && ctx.next_step_conflict) mask.forbid(Action::Back);

    // Rule 6: everyone else is waiting, so retreating is pointless.
    if (ctx.all_others_waited) mask.forbid(Action::Back);

    if (mask.count() == 0) mask.only(Action::Wait);
    return mask;
}

std::vector<double> shaping_penalty(const std::vector<Action>& actions,
                                    const std::vector<std::pair<int, int>>& conflict_pairs,
                                    const std::vector<uint8_t>& active,
                                    const RuleConfig& config,
                                    std::vector<ShapingEvent>* events) {
    std::vector<double> penalties(actions.size(), 0.0);
    if (!config.shaping_enabled) return penalties;

    std::vector<int> active_ids;
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (i < active.size() && active[i]) active_ids.push_back(static_cast<int>(i));
    if (active_ids.empty()) return penalties;

    auto all_execute = [&](Action a) {
        for (int i : active_ids)
            if (actions[i] != a) return false;
        return true;
    };
    auto emit = [&](ShapingEvent::Kind kind, const std::vector<int>& agents) {
        for (int i : agents) penalties[i] += config.rule_penalty;
        if (events) events->push_back({kind, agents, config.rule_penalty});
    };

    if (all_execute(Action::Wait)) emit(ShapingEvent::Kind::AllWait, active_ids);
    if (all_execute(Action::Replan)) emit(ShapingEvent::Kind::AllReplan, active_ids);

    for (auto [i, j] : conflict_pairs) {
        if (i < 0 || j < 0 || i >= static_cast<int>(actions.size()) ||
            j >= static_cast<int>(actions.size()))
            continue;
        if (!active[i] || !active[j]) continue;
        bool i_moves = actions[i] == Action::Move || actions[i] == Action::Back;
        bool j_moves = actions[j] == Action::Move || actions[j] == Action::Back;
        bool i_replans = actions[i] == Action::Replan;
        bool j_replans = actions[j] == Action::Replan;
        if ((i_moves && j_replans) || (j_moves && i_replans))
            emit(ShapingEvent::Kind::MixedConflictReplan, {i, j});
    }
    return penalties;
}

}  // namespace gridnav
