#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace gridnav::nn {

struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> d;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), d(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return d[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return d[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t size() const { return d.size(); }
    void zero() { std::fill(d.begin(), d.end(), 0.0); }
};

Mat matmul(const Mat& a, const Mat& b);

// Reverse-mode tape over dense matrices. Nodes are created in forward
// order; backward() replays them in reverse. Parameters are registered as
// leaves whose gradients accumulate into caller-owned storage.
class Tape {
public:
    using Id = int;

    Id constant(Mat v);
    Id param(const Mat& value, Mat& grad_out);

    const Mat& value(Id id) const { return nodes_[id].value; }
    const Mat& grad(Id id) const { return nodes_[id].grad; }

    Id matmul(Id a, Id b);
    Id add(Id a, Id b);  // same shape, or b a 1xC bias broadcast over rows
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);  // elementwise
    Id scale(Id a, double s);
    Id relu(Id a);
    Id sigmoid(Id a);
    Id tanh_(Id a);
    Id exp_(Id a);
    Id one_minus(Id a);
    Id concat_cols(Id a, Id b);  // row vectors side by side
    Id clamp(Id a, double lo, double hi);
    Id minimum(Id a, Id b);
    Id maximum(Id a, Id b);
    Id square(Id a);
    Id pick(Id row_vec, int index);  // 1x1 gather from a 1xC vector
    Id sum(Id a);                    // all elements -> 1x1

    // Log-softmax over the allowed entries of a 1xC logits row. Masked
    // entries output 0 and receive no gradient; probabilities of masked
    // actions are exactly zero.
    Id log_softmax_masked(Id logits, const std::vector<bool>& allowed);

    // Entropy of the masked categorical distribution, as a 1x1 node.
    Id masked_entropy(Id logits, const std::vector<bool>& allowed);

    void backward(Id scalar);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void()> back;  // empty for leaves
    };

    Id push(Mat value, std::function<void()> back = {});

    std::vector<Node> nodes_;
    std::vector<std::pair<Id, Mat*>> param_sinks_;
};

}  // namespace gridnav::nn
