#include "gridnav/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace gridnav::nn {

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul shape mismatch");
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            double av = a(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += av * b(k, j);
        }
    return out;
}

Tape::Id Tape::push(Mat value, std::function<void()> back) {
    Node n;
    n.grad = Mat(value.rows, value.cols);
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::constant(Mat v) { return push(std::move(v)); }

Tape::Id Tape::param(const Mat& value, Mat& grad_out) {
    Id id = push(value);
    param_sinks_.emplace_back(id, &grad_out);
    return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
    Mat out = nn::matmul(nodes_[a].value, nodes_[b].value);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, b, id] {
        const Mat& g = nodes_[id].grad;
        const Mat& av = nodes_[a].value;
        const Mat& bv = nodes_[b].value;
        Mat& ga = nodes_[a].grad;
        Mat& gb = nodes_[b].grad;
        // ga += g * b^T ; gb += a^T * g
        for (int i = 0; i < av.rows; ++i)
            for (int k = 0; k < av.cols; ++k) {
                double s = 0.0;
                for (int j = 0; j < bv.cols; ++j) s += g(i, j) * bv(k, j);
                ga(i, k) += s;
            }
        for (int k = 0; k < bv.rows; ++k)
            for (int j = 0; j < bv.cols; ++j) {
                double s = 0.0;
                for (int i = 0; i < av.rows; ++i) s += av(i, k) * g(i, j);
                gb(k, j) += s;
            }
    }, id;
}

Tape::Id Tape::add(Id a, Id b) {
    const Mat& av = nodes_[a].value;
    const Mat& bv = nodes_[b].value;
    bool broadcast = bv.rows == 1 && av.rows > 1 && bv.cols == av.cols;
    if (!broadcast && (av.rows != bv.rows || av.cols != bv.cols))
        throw std::invalid_argument("add shape mismatch");
    Mat out = av;
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j) out(i, j) += bv(broadcast ? 0 : i, j);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, b, id, broadcast] {
        const Mat& g = nodes_[id].grad;
        Mat& ga = nodes_[a].grad;
        Mat& gb = nodes_[b].grad;
        for (std::size_t k = 0; k < g.size(); ++k) ga.d[k] += g.d[k];
        if (broadcast) {
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) gb(0, j) += g(i, j);
        } else {
            for (std::size_t k = 0; k < g.size(); ++k) gb.d[k] += g.d[k];
        }
    }, id;
}

Tape::Id Tape::sub(Id a, Id b) {
    const Mat& av = nodes_[a].value;
    const Mat& bv = nodes_[b].value;
    if (av.rows != bv.rows || av.cols != bv.cols)
        throw std::invalid_argument("sub shape mismatch");
    Mat out = av;
    for (std::size_t k = 0; k < out.size(); ++k) out.d[k] -= bv.d[k];
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, b, id] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k) {
            nodes_[a].grad.d[k] += g.d[k];
            nodes_[b].grad.d[k] -= g.d[k];
        }
    }, id;
}

Tape::Id Tape::mul(Id a, Id b) {
    const Mat& av = nodes_[a].value;
    const Mat& bv = nodes_[b].value;
    if (av.rows != bv.rows || av.cols != bv.cols)
        throw std::invalid_argument("mul shape mismatch");
    Mat out = av;
    for (std::size_t k = 0; k < out.size(); ++k) out.d[k] *= bv.d[k];
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, b, id] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k) {
            nodes_[a].grad.d[k] += g.d[k] * nodes_[b].value.d[k];
            nodes_[b].grad.d[k] += g.d[k] * nodes_[a].value.d[k];
        }
    }, id;
}

Tape::Id Tape::scale(Id a, double s) {
    Mat out = nodes_[a].value;
    for (double& v : out.d) v *= s;
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id, s] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k) nodes_[a].grad.d[k] += s * g.d[k];
    }, id;
}

Tape::Id Tape::relu(Id a) {
    Mat out = nodes_[a].value;
    for (double& v : out.d) v = v > 0.0 ? v : 0.0;
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k)
            if (nodes_[a].value.d[k] > 0.0) nodes_[a].grad.d[k] += g.d[k];
    }, id;
}

Tape::Id Tape::sigmoid(Id a) {
    Mat out = nodes_[a].value;
    for (double& v : out.d) v = 1.0 / (1.0 + std::exp(-v));
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id] {
        const Mat& g = nodes_[id].grad;
        const Mat& y = nodes_[id].value;
        for (std::size_t k = 0; k < g.size(); ++k)
            nodes_[a].grad.d[k] += g.d[k] * y.d[k] * (1.0 - y.d[k]);
    }, id;
}

Tape::Id Tape::tanh_(Id a) {
    Mat out = nodes_[a].value;
    for (double& v : out.d) v = std::tanh(v);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id] {
        const Mat& g = nodes_[id].grad;
        const Mat& y = nodes_[id].value;
        for (std::size_t k = 0; k < g.size(); ++k)
            nodes_[a].grad.d[k] += g.d[k] * (1.0 - y.d[k] * y.d[k]);
    }, id;
}

Tape::Id Tape::exp_(Id a) {
    Mat out = nodes_[a].value;
    for (double& v : out.d) v = std::exp(v);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id] {
        const Mat& g = nodes_[id].grad;
        const Mat& y = nodes_[id].value;
        for (std::size_t k = 0; k < g.size(); ++k)
            nodes_[a].grad.d[k] += g.d[k] * y.d[k];
    }, id;
}

Tape::Id Tape::one_minus(Id a) {
    Mat out = nodes_[a].value;
    for (double& v : out.d) v = 1.0 - v;
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k) nodes_[a].grad.d[k] -= g.d[k];
    }, id;
}

Tape::Id Tape::concat_cols(Id a, Id b) {
    const Mat& av = nodes_[a].value;
    const Mat& bv = nodes_[b].value;
    if (av.rows != 1 || bv.rows != 1)
        throw std::invalid_argument("concat_cols expects row vectors");
    Mat out(1, av.cols + bv.cols);
    for (int j = 0; j < av.cols; ++j) out(0, j) = av(0, j);
    for (int j = 0; j < bv.cols; ++j) out(0, av.cols + j) = bv(0, j);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, b, id] {
        const Mat& g = nodes_[id].grad;
        int ac = nodes_[a].value.cols;
        for (int j = 0; j < ac; ++j) nodes_[a].grad(0, j) += g(0, j);
        for (int j = 0; j < nodes_[b].value.cols; ++j)
            nodes_[b].grad(0, j) += g(0, ac + j);
    }, id;
}

Tape::Id Tape::clamp(Id a, double lo, double hi) {
    Mat out = nodes_[a].value;
    for (double& v : out.d) v = v < lo ? lo : (v > hi ? hi : v);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id, lo, hi] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k) {
            double v = nodes_[a].value.d[k];
            if (v > lo && v < hi) nodes_[a].grad.d[k] += g.d[k];
        }
    }, id;
}

Tape::Id Tape::minimum(Id a, Id b) {
    const Mat& av = nodes_[a].value;
    const Mat& bv = nodes_[b].value;
    if (av.rows != bv.rows || av.cols != bv.cols)
        throw std::invalid_argument("minimum shape mismatch");
    Mat out = av;
    for (std::size_t k = 0; k < out.size(); ++k) out.d[k] = std::min(out.d[k], bv.d[k]);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, b, id] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (nodes_[a].value.d[k] <= nodes_[b].value.d[k])
                nodes_[a].grad.d[k] += g.d[k];
            else
                nodes_[b].grad.d[k] += g.d[k];
        }
    }, id;
}

Tape::Id Tape::maximum(Id a, Id b) {
    const Mat& av = nodes_[a].value;
    const Mat& bv = nodes_[b].value;
    if (av.rows != bv.rows || av.cols != bv.cols)
        throw std::invalid_argument("maximum shape mismatch");
    Mat out = av;
    for (std::size_t k = 0; k < out.size(); ++k) out.d[k] = std::max(out.d[k], bv.d[k]);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, b, id] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (nodes_[a].value.d[k] >= nodes_[b].value.d[k])
                nodes_[a].grad.d[k] += g.d[k];
            else
                nodes_[b].grad.d[k] += g.d[k];
        }
    }, id;
}

Tape::Id Tape::square(Id a) {
    Mat out = nodes_[a].value;
    for (double& v : out.d) v *= v;
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id] {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k)
            nodes_[a].grad.d[k] += 2.0 * nodes_[a].value.d[k] * g.d[k];
    }, id;
}

Tape::Id Tape::pick(Id row_vec, int index) {
    const Mat& v = nodes_[row_vec].value;
    if (v.rows != 1 || index < 0 || index >= v.cols)
        throw std::invalid_argument("pick out of range");
    Mat out(1, 1);
    out(0, 0) = v(0, index);
    Id id = push(std::move(out));
    return nodes_[id].back = [this, row_vec, id, index] {
        nodes_[row_vec].grad(0, index) += nodes_[id].grad(0, 0);
    }, id;
}

Tape::Id Tape::sum(Id a) {
    Mat out(1, 1);
    for (double v : nodes_[a].value.d) out(0, 0) += v;
    Id id = push(std::move(out));
    return nodes_[id].back = [this, a, id] {
        double g = nodes_[id].grad(0, 0);
        for (double& v : nodes_[a].grad.d) v += g;
    }, id;
}

Tape::Id Tape::log_softmax_masked(Id logits, const std::vector<bool>& allowed) {
    const Mat& z = nodes_[logits].value;
    if (z.rows != 1 || static_cast<int>(allowed.size()) != z.cols)
        throw std::invalid_argument("log_softmax_masked shape mismatch");
    double zmax = -1e300;
    for (int j = 0; j < z.cols; ++j)
        if (allowed[j]) zmax = std::max(zmax, z(0, j));
    if (zmax == -1e300) throw std::invalid_argument("empty action mask");
    double lse = 0.0;
    for (int j = 0; j < z.cols; ++j)
        if (allowed[j]) lse += std::exp(z(0, j) - zmax);
    lse = zmax + std::log(lse);
    Mat out(1, z.cols);
    for (int j = 0; j < z.cols; ++j) out(0, j) = allowed[j] ? z(0, j) - lse : 0.0;
    Id id = push(std::move(out));
    return nodes_[id].back = [this, logits, id, allowed] {
        const Mat& g = nodes_[id].grad;
        const Mat& lp = nodes_[id].value;
        double gsum = 0.0;
        for (int j = 0; j < g.cols; ++j)
            if (allowed[j]) gsum += g(0, j);
        for (int j = 0; j < g.cols; ++j) {
            if (!allowed[j]) continue;
            double p = std::exp(lp(0, j));
            nodes_[logits].grad(0, j) += g(0, j) - gsum * p;
        }
    }, id;
}

Tape::Id Tape::masked_entropy(Id logits, const std::vector<bool>& allowed) {
    Id lp = log_softmax_masked(logits, allowed);
    const Mat& lpv = nodes_[lp].value;
    double h = 0.0;
    for (int j = 0; j < lpv.cols; ++j)
        if (allowed[j]) h -= std::exp(lpv(0, j)) * lpv(0, j);
    Mat out(1, 1);
    out(0, 0) = h;
    Id id = push(std::move(out));
    return nodes_[id].back = [this, logits, lp, id, allowed] {
        double g = nodes_[id].grad(0, 0);
        const Mat& lpv = nodes_[lp].value;
        double h = nodes_[id].value(0, 0);
        for (int j = 0; j < lpv.cols; ++j) {
            if (!allowed[j]) continue;
            double p = std::exp(lpv(0, j));
            nodes_[logits].grad(0, j) += g * (-p * (lpv(0, j) + h));
        }
    }, id;
}

void Tape::backward(Id scalar) {
    if (nodes_[scalar].value.size() != 1)
        throw std::invalid_argument("backward target must be scalar");
    for (auto& n : nodes_) n.grad.zero();
    nodes_[scalar].grad(0, 0) = 1.0;
    for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; --id)
        if (nodes_[id].back) nodes_[id].back();
    for (auto& [id, sink] : param_sinks_) {
        const Mat& g = nodes_[id].grad;
        for (std::size_t k = 0; k < g.size(); ++k) sink->d[k] += g.d[k];
    }
}

}  // namespace gridnav::nn
