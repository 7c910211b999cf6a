#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "gridnav/env.hpp"
#include "gridnav/nets.hpp"

namespace gridnav::rl {

struct StepRecord {
    std::vector<double> obs;
    std::vector<double> critic_input;
    std::vector<bool> mask;  // kNumActions flags
    int action = 0;
    double log_prob = 0.0;
    double value = 0.0;
    double reward = 0.0;       // shared reward, shaping included
    double base_reward = 0.0;  // shared reward without shaping
    double advantage = 0.0;
    double return_ = 0.0;
};

struct Episode {
    // One trajectory per agent; all trajectories have equal length.
    std::vector<std::vector<StepRecord>> agents;
    bool success = false;
    int scenario_index = 0;

    int length() const {
        return agents.empty() ? 0 : static_cast<int>(agents[0].size());
    }
    double episode_reward() const;       // shared return, shaping included
    double base_episode_reward() const;  // shared return, shaping excluded
};

struct RolloutBuffer {
    std::vector<Episode> episodes;

    long total_steps() const;
    void clear() { episodes.clear(); }
};

struct TrainConfig {
    double learning_rate = 1e-5;
    double gamma = 0.99;
    double clip = 0.1;
    long total_env_steps = 100000;
    int episode_cap = 60;
    double gae_lambda = 0.95;
    int epochs = 4;
    int minibatches = 2;  // whole episodes per recurrent chunk
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double grad_clip = 10.0;
    int episodes_per_update = 10;
    bool share_critic = true;  // off: critic sees only the agent's own obs
    int hidden_dim = 128;
    std::uint64_t seed = 1;
};

// Fills advantage/return_ in place. Episodes are treated as terminal at
// their last step (cap truncation is not bootstrapped).
void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda);

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double grad_norm = 0.0;  // pre-clip, last minibatch
    bool finite = true;
};

// Runs config.epochs passes of config.minibatches whole-episode chunks.
// On a non-finite loss the minibatch is skipped and finite set to false.
UpdateStats ppo_update(nn::Network& actor, nn::Network& critic,
                       const RolloutBuffer& buffer, const TrainConfig& config,
                       std::mt19937_64& rng);

struct CurvePoint {
    int update_index = 0;
    long env_steps = 0;
    double mean_episode_reward = 0.0;  // shaping excluded, comparable across setups
    double success_rate = 0.0;
};

struct TrainResult {
    std::vector<CurvePoint> curve;
    bool aborted = false;  // divergence: parameters rolled back to last good
    double best_eval = 0.0;
    int best_update = -1;
};

// Critic feature assembly: all observations in agent order, then the
// agent-id one-hot, then distances to the other agents; with share_critic
// off, just the agent's own observation.
std::vector<double> critic_features(const std::vector<std::vector<double>>& all_obs,
                                    int agent, bool share_critic);

class Trainer {
public:
    Trainer(std::vector<Scenario> suite, const FootprintLibrary& footprints,
            EnvConfig env_config, TrainConfig config);

    nn::Network& actor() { return actor_; }
    nn::Network& critic() { return critic_; }
    const TrainConfig& config() const { return config_; }
    const EnvConfig& env_config() const { return env_config_; }

    // Rollout/update loop to total_env_steps; one curve row per update.
    TrainResult train(std::ostream* curve = nullptr);

    // Greedy (argmax) pass over the whole suite with the current actor:
    // (mean shared return without shaping, success rate).
    std::pair<double, double> evaluate();

    Episode collect_episode(const Scenario& scenario, bool greedy,
                            std::mt19937_64& rng, int scenario_index = 0);

    void save_checkpoint(std::ostream& out) const;
    void load_checkpoint(std::istream& in);

private:
    std::vector<Scenario> suite_;
    const FootprintLibrary* footprints_;
    EnvConfig env_config_;
    TrainConfig config_;
    nn::Network actor_;
    nn::Network critic_;
    std::mt19937_64 rng_;
};

}  // namespace gridnav::rl
