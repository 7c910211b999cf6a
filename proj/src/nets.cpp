#include "gridnav/nets.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace gridnav::nn {

Network::Network(std::string prefix, NetConfig config) : config_(config) {
    int in = config_.input_dim, h = config_.hidden_dim, out = config_.output_dim;
    auto add = [&](const char* name, int r, int c) {
        params_.emplace_back(prefix + "." + name, r, c);
    };
    add("w1", in, h);
    add("b1", 1, h);
    add("w2", h, h);
    add("b2", 1, h);
    recurrent_offset_ = static_cast<int>(params_.size());
    if (config_.recurrent == RecurrentKind::Gru) {
        add("gru.wz", h, h);
        add("gru.uz", h, h);
        add("gru.bz", 1, h);
        add("gru.wr", h, h);
        add("gru.ur", h, h);
        add("gru.br", 1, h);
        add("gru.wh", h, h);
        add("gru.uh", h, h);
        add("gru.bh", 1, h);
    } else {
        add("rnn.wx", h, h);
        add("rnn.uh", h, h);
        add("rnn.bh", 1, h);
    }
    head_offset_ = static_cast<int>(params_.size());
    add("wo", h, out);
    add("bo", 1, out);
}

std::vector<Param*> Network::parameters() {
    std::vector<Param*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

std::vector<const Param*> Network::parameters() const {
    std::vector<const Param*> out;
    for (const auto& p : params_) out.push_back(&p);
    return out;
}

void Network::init(std::mt19937_64& rng) {
    for (auto& p : params_) {
        if (p.value.rows == 1) {  // biases start at zero
            p.value.zero();
            continue;
        }
        double bound = std::sqrt(6.0 / (p.value.rows + p.value.cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : p.value.d) v = dist(rng);
    }
}

namespace {

Mat affine(const Mat& x, const Mat& w, const Mat& b) {
    Mat y = matmul(x, w);
    for (int j = 0; j < y.cols; ++j) y(0, j) += b(0, j);
    return y;
}

void relu_inplace(Mat& m) {
    for (double& v : m.d) v = v > 0.0 ? v : 0.0;
}

void sigmoid_inplace(Mat& m) {
    for (double& v : m.d) v = 1.0 / (1.0 + std::exp(-v));
}

void tanh_inplace(Mat& m) {
    for (double& v : m.d) v = std::tanh(v);
}

}  // namespace

Mat Network::forward(const Mat& input, Mat& hidden) const {
    if (input.cols != config_.input_dim)
        throw std::invalid_argument("network input dimension mismatch");
    const auto& P = params_;
    Mat x = affine(input, P[0].value, P[1].value);
    relu_inplace(x);
    x = affine(x, P[2].value, P[3].value);
    relu_inplace(x);

    int r = recurrent_offset_;
    if (config_.recurrent == RecurrentKind::Gru) {
        Mat z = affine(x, P[r + 0].value, P[r + 2].value);
        {
            Mat hz = matmul(hidden, P[r + 1].value);
            for (int j = 0; j < z.cols; ++j) z(0, j) += hz(0, j);
        }
        sigmoid_inplace(z);
        Mat rr = affine(x, P[r + 3].value, P[r + 5].value);
        {
            Mat hr = matmul(hidden, P[r + 4].value);
            for (int j = 0; j < rr.cols; ++j) rr(0, j) += hr(0, j);
        }
        sigmoid_inplace(rr);
        Mat rh = hidden;
        for (int j = 0; j < rh.cols; ++j) rh(0, j) *= rr(0, j);
        Mat hh = affine(x, P[r + 6].value, P[r + 8].value);
        {
            Mat uh = matmul(rh, P[r + 7].value);
            for (int j = 0; j < hh.cols; ++j) hh(0, j) += uh(0, j);
        }
        tanh_inplace(hh);
        for (int j = 0; j < hidden.cols; ++j)
            hidden(0, j) = (1.0 - z(0, j)) * hidden(0, j) + z(0, j) * hh(0, j);
    } else {
        Mat h = affine(x, P[r + 0].value, P[r + 2].value);
        Mat uh = matmul(hidden, P[r + 1].value);
        for (int j = 0; j < h.cols; ++j) h(0, j) += uh(0, j);
        tanh_inplace(h);
        hidden = h;
    }
    return affine(hidden, P[head_offset_].value, P[head_offset_ + 1].value);
}

Network::TapeParams Network::register_params(Tape& tape) {
    TapeParams tp;
    for (auto& p : params_) tp.ids.push_back(tape.param(p.value, p.grad));
    return tp;
}

Tape::Id Network::forward_tape(Tape& tape, const TapeParams& tp, Tape::Id input,
                               Tape::Id& hidden) const {
    const auto& id = tp.ids;
    Tape::Id x = tape.relu(tape.add(tape.matmul(input, id[0]), id[1]));
    x = tape.relu(tape.add(tape.matmul(x, id[2]), id[3]));

    int r = recurrent_offset_;
    if (config_.recurrent == RecurrentKind::Gru) {
        Tape::Id z = tape.sigmoid(tape.add(
            tape.add(tape.matmul(x, id[r + 0]), tape.matmul(hidden, id[r + 1])),
            id[r + 2]));
        Tape::Id rr = tape.sigmoid(tape.add(
            tape.add(tape.matmul(x, id[r + 3]), tape.matmul(hidden, id[r + 4])),
            id[r + 5]));
        Tape::Id rh = tape.mul(rr, hidden);
        Tape::Id hh = tape.tanh_(tape.add(
            tape.add(tape.matmul(x, id[r + 6]), tape.matmul(rh, id[r + 7])),
            id[r + 8]));
        hidden = tape.add(tape.mul(tape.one_minus(z), hidden), tape.mul(z, hh));
    } else {
        hidden = tape.tanh_(tape.add(
            tape.add(tape.matmul(x, id[r + 0]), tape.matmul(hidden, id[r + 1])),
            id[r + 2]));
    }
    return tape.add(tape.matmul(hidden, id[head_offset_]), id[head_offset_ + 1]);
}

double rmsprop_step(std::vector<Param*>& params, const RmsPropConfig& config,
                    double grad_clip_norm) {
    double norm2 = 0.0;
    for (Param* p : params)
        for (double g : p->grad.d) norm2 += g * g;
    double norm = std::sqrt(norm2);
    double scale = 1.0;
    if (grad_clip_norm > 0.0 && norm > grad_clip_norm)
        scale = grad_clip_norm / norm;
    for (Param* p : params)
        for (std::size_t k = 0; k < p->value.size(); ++k) {
            double g = p->grad.d[k] * scale;
            p->rms.d[k] = config.decay * p->rms.d[k] + (1.0 - config.decay) * g * g;
            p->value.d[k] -= config.learning_rate * g /
                             (std::sqrt(p->rms.d[k]) + config.epsilon);
        }
    return norm;
}

void zero_grads(std::vector<Param*>& params) {
    for (Param* p : params) p->grad.zero();
}

std::vector<double> masked_probabilities(const Mat& logits,
                                         const std::vector<bool>& allowed) {
    std::vector<double> probs(logits.cols, 0.0);
    double zmax = -1e300;
    for (int j = 0; j < logits.cols; ++j)
        if (allowed[j]) zmax = std::max(zmax, logits(0, j));
    if (zmax == -1e300) throw std::invalid_argument("empty action mask");
    double total = 0.0;
    for (int j = 0; j < logits.cols; ++j)
        if (allowed[j]) total += std::exp(logits(0, j) - zmax);
    for (int j = 0; j < logits.cols; ++j)
        if (allowed[j]) probs[j] = std::exp(logits(0, j) - zmax) / total;
    return probs;
}

double masked_log_probability(const Mat& logits, const std::vector<bool>& allowed,
                              int action) {
    if (!allowed[action]) throw std::invalid_argument("log prob of masked action");
    double zmax = -1e300;
    for (int j = 0; j < logits.cols; ++j)
        if (allowed[j]) zmax = std::max(zmax, logits(0, j));
    double total = 0.0;
    for (int j = 0; j < logits.cols; ++j)
        if (allowed[j]) total += std::exp(logits(0, j) - zmax);
    return logits(0, action) - zmax - std::log(total);
}

int sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double u = dist(rng);
    double acc = 0.0;
    int last = -1;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0) continue;
        last = static_cast<int>(j);
        acc += probs[j];
        if (u <= acc) return last;
    }
    return last;
}

int argmax_index(const std::vector<double>& probs) {
    int best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j)
        if (probs[j] > probs[best]) best = static_cast<int>(j);
    return best;
}

void write_params(std::ostream& out, const std::vector<const Param*>& params) {
    out.precision(17);
    for (const Param* p : params) {
        out << p->name << ' ' << p->value.rows << ' ' << p->value.cols << '\n';
        for (std::size_t k = 0; k < p->value.size(); ++k)
            out << p->value.d[k] << (k + 1 == p->value.size() ? '\n' : ' ');
    }
}

void read_params(std::istream& in, std::vector<Param*>& params) {
    for (Param* p : params) {
        std::string name;
        int rows, cols;
        if (!(in >> name >> rows >> cols))
            throw std::runtime_error("checkpoint truncated at " + p->name);
        if (name != p->name || rows != p->value.rows || cols != p->value.cols)
            throw std::runtime_error("checkpoint mismatch: expected " + p->name +
                                     ", found " + name);
        for (double& v : p->value.d)
            if (!(in >> v)) throw std::runtime_error("checkpoint truncated");
    }
}

}  // namespace gridnav::nn
