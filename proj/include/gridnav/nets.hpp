#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "gridnav/tape.hpp"

namespace gridnav::nn {

struct Param {
    std::string name;
    Mat value;
    Mat grad;
    Mat rms;  // RMSprop accumulator

    Param(std::string n, int rows, int cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols), rms(rows, cols) {}
};

enum class RecurrentKind { Gru, Rnn };

struct NetConfig {
    int input_dim = 71;
    int hidden_dim = 128;
    int output_dim = 4;
    RecurrentKind recurrent = RecurrentKind::Gru;
};

// Two dense ReLU layers, one recurrent layer, linear head. Shared by the
// actor (4 logits) and the critic (1 value).
class Network {
public:
    Network(std::string prefix, NetConfig config);

    const NetConfig& config() const { return config_; }
    std::vector<Param*> parameters();
    std::vector<const Param*> parameters() const;

    void init(std::mt19937_64& rng);
    Mat initial_hidden() const { return Mat(1, config_.hidden_dim); }

    // Fast inference path, no gradient bookkeeping.
    Mat forward(const Mat& input, Mat& hidden) const;

    // Tape path. Parameters must be registered once per tape and reused
    // across timesteps so gradients accumulate.
    struct TapeParams {
        std::vector<Tape::Id> ids;
    };
    TapeParams register_params(Tape& tape);
    Tape::Id forward_tape(Tape& tape, const TapeParams& tp, Tape::Id input,
                          Tape::Id& hidden) const;

private:
    NetConfig config_;
    std::vector<Param> params_;
    // layout: w1 b1 w2 b2 [gru: wz uz bz wr ur br wh uh bh | rnn: wx uh bh] wo bo
    int recurrent_offset_ = 0;
    int head_offset_ = 0;
};

struct RmsPropConfig {
    double learning_rate = 1e-5;
    double decay = 0.99;
    double epsilon = 1e-8;
};

// Returns the pre-clip global gradient norm.
double rmsprop_step(std::vector<Param*>& params, const RmsPropConfig& config,
                    double grad_clip_norm);

void zero_grads(std::vector<Param*>& params);

// Masked categorical helpers over a 1x4 logits row.
std::vector<double> masked_probabilities(const Mat& logits,
                                         const std::vector<bool>& allowed);
double masked_log_probability(const Mat& logits, const std::vector<bool>& allowed,
                              int action);
int sample_index(const std::vector<double>& probs, std::mt19937_64& rng);
int argmax_index(const std::vector<double>& probs);

void write_params(std::ostream& out, const std::vector<const Param*>& params);
void read_params(std::istream& in, std::vector<Param*>& params);

}  // namespace gridnav::nn
