#include "gridnav/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gridnav::rl {

using nn::Mat;
using nn::Network;
using nn::Param;
using nn::Tape;

double Episode::episode_reward() const {
    double total = 0.0;
    if (agents.empty()) return total;
    for (const auto& rec : agents[0]) total += rec.reward;
    return total;
}

double Episode::base_episode_reward() const {
    double total = 0.0;
    if (agents.empty()) return total;
    for (const auto& rec : agents[0]) total += rec.base_reward;
    return total;
}

long RolloutBuffer::total_steps() const {
    long n = 0;
    for (const auto& ep : episodes) n += ep.length();
    return n;
}

void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda) {
    for (auto& ep : buffer.episodes) {
        for (auto& traj : ep.agents) {
            double next_adv = 0.0;
            double next_value = 0.0;  // last step treated as terminal
            for (int t = static_cast<int>(traj.size()) - 1; t >= 0; --t) {
                StepRecord& rec = traj[t];
                double delta = rec.reward + gamma * next_value - rec.value;
                rec.advantage = delta + gamma * lambda * next_adv;
                rec.return_ = rec.advantage + rec.value;
                next_adv = rec.advantage;
                next_value = rec.value;
            }
        }
    }
}

std::vector<double> critic_features(const std::vector<std::vector<double>>& all_obs,
                                    int agent, bool share_critic) {
    if (!share_critic) return all_obs[agent];
    int n = static_cast<int>(all_obs.size());
    std::vector<double> out;
    for (const auto& o : all_obs) out.insert(out.end(), o.begin(), o.end());
    for (int i = 0; i < n; ++i) out.push_back(i == agent ? 1.0 : 0.0);
    // o^d occupies entries [1, n) of the agent's own observation
    for (int k = 1; k < n; ++k) out.push_back(all_obs[agent][k]);
    return out;
}

namespace {

Mat row_mat(const std::vector<double>& v) {
    Mat m(1, static_cast<int>(v.size()));
    m.d = v;
    return m;
}

Mat scalar_mat(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
}

bool params_finite(const std::vector<Param*>& params) {
    for (const Param* p : params)
        for (double v : p->value.d)
            if (!std::isfinite(v)) return false;
    return true;
}

std::vector<Mat> snapshot(const std::vector<Param*>& params) {
    std::vector<Mat> out;
    for (const Param* p : params) out.push_back(p->value);
    return out;
}

void restore(std::vector<Param*>& params, const std::vector<Mat>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace

UpdateStats ppo_update(Network& actor, Network& critic, const RolloutBuffer& buffer,
                       const TrainConfig& config, std::mt19937_64& rng) {
    UpdateStats stats;
    long total = 0;
    double adv_sum = 0.0;
    for (const auto& ep : buffer.episodes)
        for (const auto& traj : ep.agents)
            for (const auto& rec : traj) {
                adv_sum += rec.advantage;
                ++total;
            }
    if (total == 0) return stats;
    double adv_mean = adv_sum / static_cast<double>(total);
    double var = 0.0;
    for (const auto& ep : buffer.episodes)
        for (const auto& traj : ep.agents)
            for (const auto& rec : traj)
                var += (rec.advantage - adv_mean) * (rec.advantage - adv_mean);
    double adv_std = std::sqrt(var / static_cast<double>(total)) + 1e-8;

    std::vector<Param*> params = actor.parameters();
    {
        auto cp = critic.parameters();
        params.insert(params.end(), cp.begin(), cp.end());
    }
    nn::RmsPropConfig opt;
    opt.learning_rate = config.learning_rate;

    int n_episodes = static_cast<int>(buffer.episodes.size());
    std::vector<int> order(n_episodes);
    std::iota(order.begin(), order.end(), 0);
    int chunks = std::max(1, std::min(config.minibatches, n_episodes));

    double policy_sum = 0.0, value_sum = 0.0, entropy_sum = 0.0;
    long clip_hits = 0, sample_count = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (int chunk = 0; chunk < chunks; ++chunk) {
            int lo = chunk * n_episodes / chunks;
            int hi = (chunk + 1) * n_episodes / chunks;
            if (lo == hi) continue;

            Tape tape;
            auto actor_tp = actor.register_params(tape);
            auto critic_tp = critic.register_params(tape);
            Tape::Id loss = tape.constant(scalar_mat(0.0));
            int n_samples = 0;
            double chunk_policy = 0.0, chunk_value = 0.0, chunk_entropy = 0.0;

            for (int k = lo; k < hi; ++k) {
                const Episode& ep = buffer.episodes[order[k]];
                for (const auto& traj : ep.agents) {
                    Tape::Id ah = tape.constant(actor.initial_hidden());
                    Tape::Id ch = tape.constant(critic.initial_hidden());
                    for (const StepRecord& rec : traj) {
                        double adv = (rec.advantage - adv_mean) / adv_std;
                        Tape::Id logits = actor.forward_tape(
                            tape, actor_tp, tape.constant(row_mat(rec.obs)), ah);
                        Tape::Id logp = tape.pick(
                            tape.log_softmax_masked(logits, rec.mask), rec.action);
                        Tape::Id ratio = tape.exp_(
                            tape.sub(logp, tape.constant(scalar_mat(rec.log_prob))));
                        Tape::Id surr = tape.minimum(
                            tape.scale(ratio, adv),
                            tape.scale(tape.clamp(ratio, 1.0 - config.clip,
                                                  1.0 + config.clip),
                                       adv));
                        Tape::Id ent = tape.masked_entropy(logits, rec.mask);

                        Tape::Id v = critic.forward_tape(
                            tape, critic_tp,
                            tape.constant(row_mat(rec.critic_input)), ch);
                        Tape::Id v_old = tape.constant(scalar_mat(rec.value));
                        Tape::Id ret = tape.constant(scalar_mat(rec.return_));
                        Tape::Id v_clip = tape.add(
                            v_old, tape.clamp(tape.sub(v, v_old), -config.clip,
                                              config.clip));
                        Tape::Id v_err = tape.maximum(
                            tape.square(tape.sub(v, ret)),
                            tape.square(tape.sub(v_clip, ret)));

                        loss = tape.add(
                            loss,
                            tape.add(tape.add(tape.scale(surr, -1.0),
                                              tape.scale(v_err, config.value_coef)),
                                     tape.scale(ent, -config.entropy_coef)));
                        ++n_samples;

                        double r = tape.value(ratio)(0, 0);
                        chunk_policy -= tape.value(surr)(0, 0);
                        chunk_value += tape.value(v_err)(0, 0);
                        chunk_entropy += tape.value(ent)(0, 0);
                        if (std::abs(r - 1.0) > config.clip) ++clip_hits;
                    }
                }
            }
            if (n_samples == 0) continue;
            loss = tape.scale(loss, 1.0 / n_samples);
            if (!std::isfinite(tape.value(loss)(0, 0))) {
                stats.finite = false;
                continue;
            }
            nn::zero_grads(params);
            tape.backward(loss);
            stats.grad_norm = nn::rmsprop_step(params, opt, config.grad_clip);
            policy_sum += chunk_policy;
            value_sum += chunk_value;
            entropy_sum += chunk_entropy;
            sample_count += n_samples;
        }
    }
    if (sample_count > 0) {
        stats.policy_loss = policy_sum / static_cast<double>(sample_count);
        stats.value_loss = value_sum / static_cast<double>(sample_count);
        stats.entropy = entropy_sum / static_cast<double>(sample_count);
        stats.clip_fraction =
            static_cast<double>(clip_hits) / static_cast<double>(sample_count);
    }
    if (!params_finite(params)) stats.finite = false;
    return stats;
}

Trainer::Trainer(std::vector<Scenario> suite, const FootprintLibrary& footprints,
                 EnvConfig env_config, TrainConfig config)
    : suite_(std::move(suite)),
      footprints_(&footprints),
      env_config_(env_config),
      config_(config),
      actor_("actor",
             nn::NetConfig{
                 env_config.observation_dim(
                     suite_.empty() ? 2 : static_cast<int>(suite_[0].agents.size())),
                 config.hidden_dim, kNumActions, nn::RecurrentKind::Gru}),
      critic_("critic",
              nn::NetConfig{
                  [&] {
                      int n = suite_.empty()
                                  ? 2
                                  : static_cast<int>(suite_[0].agents.size());
                      return config.share_critic ? env_config.critic_input_dim(n)
                                                 : env_config.observation_dim(n);
                  }(),
                  config.hidden_dim, 1, nn::RecurrentKind::Gru}) {
    if (suite_.empty()) throw std::invalid_argument("empty training suite");
    std::size_t n = suite_[0].agents.size();
    for (const auto& s : suite_)
        if (s.agents.size() != n)
            throw std::invalid_argument("training suite mixes agent counts");
    rng_.seed(config_.seed);
    actor_.init(rng_);
    critic_.init(rng_);
}

Episode Trainer::collect_episode(const Scenario& scenario, bool greedy,
                                 std::mt19937_64& rng, int scenario_index) {
    Environment env(scenario, *footprints_, env_config_);
    std::vector<Observation> obs = env.reset();
    int n = env.num_agents();

    Episode ep;
    ep.scenario_index = scenario_index;
    ep.agents.resize(n);
    std::vector<Mat> actor_hidden(n, actor_.initial_hidden());
    std::vector<Mat> critic_hidden(n, critic_.initial_hidden());

    int t = 0;
    while (!env.terminated() && t < config_.episode_cap) {
        std::vector<std::vector<double>> all_obs(n);
        for (int a = 0; a < n; ++a) all_obs[a] = obs[a].flatten();

        std::vector<Action> actions(n, Action::Wait);
        std::vector<StepRecord> recs(n);
        for (int a = 0; a < n; ++a) {
            ActionMask mask = env.mask(a);
            std::vector<bool> allowed(kNumActions);
            for (int j = 0; j < kNumActions; ++j)
                allowed[j] = mask.allowed[static_cast<std::size_t>(j)];

            Mat logits = actor_.forward(row_mat(all_obs[a]), actor_hidden[a]);
            auto probs = nn::masked_probabilities(logits, allowed);
            int action = greedy ? nn::argmax_index(probs)
                                : nn::sample_index(probs, rng);
            actions[a] = static_cast<Action>(action);

            StepRecord& rec = recs[a];
            rec.obs = all_obs[a];
            rec.mask = allowed;
            rec.action = action;
            rec.log_prob = nn::masked_log_probability(logits, allowed, action);
            if (!greedy) {  // execution is decentralized: no critic at eval time
                rec.critic_input =
                    critic_features(all_obs, a, config_.share_critic);
                Mat v = critic_.forward(row_mat(rec.critic_input), critic_hidden[a]);
                rec.value = v(0, 0);
            }
        }

        JointStep js = env.step(actions);
        for (int a = 0; a < n; ++a) {
            recs[a].reward = js.shared_reward;
            recs[a].base_reward = js.shared_base_reward;
            ep.agents[a].push_back(std::move(recs[a]));
        }
        ++t;
        if (!env.terminated())
            for (int a = 0; a < n; ++a) obs[a] = env.observe(a);
    }

    bool ok = true;
    for (int a = 0; a < n; ++a) {
        const AgentState& st = env.agent(a);
        if (st.collided || !st.done || st.cell != scenario.agents[a].goal) ok = false;
    }
    ep.success = ok;
    return ep;
}

std::pair<double, double> Trainer::evaluate() {
    double reward_sum = 0.0;
    int successes = 0;
    std::mt19937_64 dummy(0);
    for (std::size_t i = 0; i < suite_.size(); ++i) {
        Episode ep = collect_episode(suite_[i], true, dummy, static_cast<int>(i));
        reward_sum += ep.base_episode_reward();
        successes += ep.success ? 1 : 0;
    }
    double n = static_cast<double>(suite_.size());
    return {reward_sum / n, successes / n};
}

TrainResult Trainer::train(std::ostream* curve) {
    TrainResult result;
    std::vector<Param*> params = actor_.parameters();
    {
        auto cp = critic_.parameters();
        params.insert(params.end(), cp.begin(), cp.end());
    }
    std::vector<Mat> best = snapshot(params);
    result.best_eval = -1e300;

    if (curve) *curve << "update_index,env_steps,mean_episode_reward,success_rate\n";

    long steps_done = 0;
    int update_index = 0;
    while (steps_done < config_.total_env_steps) {
        RolloutBuffer buffer;
        for (int e = 0; e < config_.episodes_per_update; ++e) {
            std::size_t idx = rng_() % suite_.size();
            buffer.episodes.push_back(collect_episode(
                suite_[idx], false, rng_, static_cast<int>(idx)));
        }
        steps_done += buffer.total_steps();
        compute_advantages(buffer, config_.gamma, config_.gae_lambda);

        std::vector<Mat> last_good = snapshot(params);
        UpdateStats stats = ppo_update(actor_, critic_, buffer, config_, rng_);
        if (!stats.finite) {
            restore(params, last_good);
            result.aborted = true;
            break;
        }

        ++update_index;
        double reward_sum = 0.0;
        int successes = 0;
        for (const auto& ep : buffer.episodes) {
            reward_sum += ep.base_episode_reward();
            successes += ep.success ? 1 : 0;
        }
        CurvePoint point;
        point.update_index = update_index;
        point.env_steps = steps_done;
        point.mean_episode_reward =
            reward_sum / static_cast<double>(buffer.episodes.size());
        point.success_rate = static_cast<double>(successes) /
                             static_cast<double>(buffer.episodes.size());
        result.curve.push_back(point);
        if (curve) {
            std::ostringstream line;
            line.precision(17);
            line << point.update_index << ',' << point.env_steps << ','
                 << point.mean_episode_reward << ',' << point.success_rate << '\n';
            *curve << line.str();
        }

        auto [eval_reward, eval_success] = evaluate();
        double score = eval_success * 1e6 + eval_reward;
        if (score > result.best_eval) {
            result.best_eval = score;
            result.best_update = update_index;
            best = snapshot(params);
        }
    }
    if (result.best_update > 0) restore(params, best);
    return result;
}

void Trainer::save_checkpoint(std::ostream& out) const {
    out << "gridnav-checkpoint 1\n";
    out.precision(17);
    out << "learning_rate " << config_.learning_rate << '\n'
        << "gamma " << config_.gamma << '\n'
        << "clip " << config_.clip << '\n'
        << "total_env_steps " << config_.total_env_steps << '\n'
        << "episode_cap " << config_.episode_cap << '\n'
        << "gae_lambda " << config_.gae_lambda << '\n'
        << "epochs " << config_.epochs << '\n'
        << "minibatches " << config_.minibatches << '\n'
        << "entropy_coef " << config_.entropy_coef << '\n'
        << "value_coef " << config_.value_coef << '\n'
        << "grad_clip " << config_.grad_clip << '\n'
        << "episodes_per_update " << config_.episodes_per_update << '\n'
        << "share_critic " << (config_.share_critic ? 1 : 0) << '\n'
        << "hidden_dim " << config_.hidden_dim << '\n'
        << "seed " << config_.seed << '\n'
        << "lookahead " << env_config_.lookahead << '\n'
        << "mask_enabled " << (env_config_.rules.mask_enabled ? 1 : 0) << '\n'
        << "shaping_enabled " << (env_config_.rules.shaping_enabled ? 1 : 0) << '\n'
        << "rule_penalty " << env_config_.rules.rule_penalty << '\n'
        << "params\n";
    std::vector<const Param*> all = actor_.parameters();
    {
        auto cp = critic_.parameters();
        all.insert(all.end(), cp.begin(), cp.end());
    }
    nn::write_params(out, all);
}

void Trainer::load_checkpoint(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("gridnav-checkpoint", 0) != 0)
        throw std::runtime_error("not a checkpoint file");
    while (std::getline(in, line)) {
        if (line == "params") break;
        std::istringstream kv(line);
        std::string key;
        kv >> key;
        if (key == "share_critic") {
            int v = 1;
            kv >> v;
            if (static_cast<bool>(v) != config_.share_critic)
                throw std::runtime_error("checkpoint share_critic mismatch");
        } else if (key == "hidden_dim") {
            int v = 0;
            kv >> v;
            if (v != config_.hidden_dim)
                throw std::runtime_error("checkpoint hidden_dim mismatch");
        }
    }
    std::vector<Param*> all = actor_.parameters();
    {
        auto cp = critic_.parameters();
        all.insert(all.end(), cp.begin(), cp.end());
    }
    nn::read_params(in, all);
}

}  // namespace gridnav::rl
