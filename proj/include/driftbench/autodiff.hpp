#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftbench/bow.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

std::string shape_str(const Mat& m);

// ---------------------------------------------------------------------------
// ParameterStore: named dense parameters with matching gradient accumulators
// and per-parameter moment buffers for the adaptive-moment optimizer.
// ---------------------------------------------------------------------------
struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class ParameterStore {
public:
    Mat& create(const std::string& name, Mat init);
    bool contains(const std::string& name) const;
    Mat& value(const std::string& name);
    const Mat& value(const std::string& name) const;
    Mat& grad(const std::string& name);
    const Mat& grad(const std::string& name) const;
    void zero_grads();
    std::vector<std::string> names() const;  // sorted
    size_t coordinate_count() const;

    std::map<std::string, Mat> snapshot_values() const;
    void restore_values(const std::map<std::string, Mat>& snap);

    friend void adam_step(ParameterStore& params, const AdamConfig& cfg);

private:
    struct Entry {
        Mat value;
        Mat grad;
        Mat m;
        Mat v;
    };
    std::map<std::string, Entry> entries_;
    long long adam_t_ = 0;
};

// Adaptive-moment update with bias correction; zeroes gradients afterwards.
void adam_step(ParameterStore& params, const AdamConfig& cfg = {});

// ---------------------------------------------------------------------------
// Tape: operation graph recorded during one forward pass. backward() walks
// the nodes once in reverse creation order (a reverse topological order) and
// then flushes leaf gradients into their bound ParameterStore entries.
// ---------------------------------------------------------------------------
class Tape;

struct Var {
    Tape* tape = nullptr;
    int idx = -1;
    const Mat& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf holding a copy of `value`. Gradients are tracked but go nowhere.
    Var input(Mat value);

    // Leaf aliasing a stored parameter (no copy). The store must outlive the
    // tape and stay unmodified until backward() has run. Repeated calls for
    // the same parameter return the same node.
    Var param(ParameterStore& store, const std::string& name);

    // Interior node; `back` adds this node's contribution to parent grads.
    Var make(Mat value, std::vector<int> parents,
             std::function<void(Tape&, int)> back);

    // Seeds d(loss)/d(loss) = 1, runs every node's backward exactly once in
    // reverse order, then accumulates leaf grads into bound stores.
    void backward(const Var& loss);

    const Mat& value(int idx) const;
    Mat& grad(int idx);
    const Mat& grad(int idx) const;
    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat owned;
        const Mat* external = nullptr;  // set for parameter leaves
        Mat grad;
        std::vector<int> parents;
        std::function<void(Tape&, int)> back;
    };
    struct Binding {
        int node;
        ParameterStore* store;
        std::string name;
    };
    std::vector<Node> nodes_;
    std::vector<Binding> bindings_;
    std::map<std::pair<const ParameterStore*, std::string>, int> param_cache_;
    bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// Differentiable operations (free functions building tape nodes).
// ---------------------------------------------------------------------------
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double c);
Var hadamard(Var a, Var b);
Var matmul(Var a, Var b);
Var transpose(Var a);

// W*x + b, with b broadcast over the columns of x.
Var affine(Var x, Var w, Var b);

Var relu(Var x);

// Numerically stable (max-subtracted) softmax. Vectors are normalized as a
// whole; matrices row-wise.
Var softmax(Var x);
// Column-wise softmax, used for batched per-document distributions.
Var softmax_cols(Var x);

// Vertical concatenation of two column vectors.
Var concat(Var a, Var b);

// Mean over the rows of a T x d matrix, returned as a d-vector.
Var mean_rows(Var x);

// Stacks table rows given by `rows` (embedding lookup); grads scatter-add.
Var gather_rows(Var table, const std::vector<int>& rows);

// Elementwise sum of same-shaped vars.
Var sum(const std::vector<Var>& xs);

// Per-class binary cross-entropy over a probability vector (summed over
// classes): -sum_l [y_l log p_l + (1-y_l) log(1-p_l)], probabilities clamped
// to [1e-12, 1-1e-12] before the logs. `pred` must lie on the simplex within
// 1e-6.
Var cross_entropy(Var pred, int target);
Var cross_entropy(Var pred, const Vec& one_hot);

// mu + exp(log_sigma) .* noise (reparameterized Gaussian draw).
Var gaussian_sample(Var mu, Var log_sigma, const Mat& noise);

// Closed-form KL( N(mu, diag(sigma^2)) || N(0, I) ) summed over all entries.
Var kl_standard_normal(Var mu, Var log_sigma);

// W*v + b for a sparse bag-of-words v (only touched columns of W enter the
// graph). The batch form lays documents out as columns.
Var bow_affine(Var w, Var b, const BowVector& v);
Var bow_affine(Var w, Var b, std::span<const BowVector> batch);

// Multinomial negative log-likelihood of observed counts under
// softmax(logits), computed in log-space: total*logsumexp - sum c_w logit_w.
// The batch form expects one logits column per document and sums the result.
Var bow_nll(Var logits, const BowVector& counts);
Var bow_nll(Var logits, std::span<const BowVector> batch);

// ---------------------------------------------------------------------------
// Finite-difference oracle. `loss_fn` must rebuild the forward pass from the
// current parameter values, run backward, accumulate grads into `params`,
// and return the loss. Returns the max over coordinates of
// |g_fd - g_tape| / max(1e-8, |g_fd| + |g_tape|).
// ---------------------------------------------------------------------------
struct FdResult {
    double max_rel_error = 0.0;
    std::string worst_coordinate;
};

FdResult finite_difference_check(const std::function<double()>& loss_fn,
                                 ParameterStore& params, double step);

}  // namespace driftbench
