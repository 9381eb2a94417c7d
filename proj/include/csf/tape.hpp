#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "csf/matrix.hpp"

namespace csf {

// A learnable tensor with persistent gradient storage. Parameters live outside
// any tape and are bound into one with Tape::use(); after Tape::backward(),
// Tape::flush_param_grads() adds the tape-local gradients into Param::grad.
struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
    bool trainable = true;

    Param() = default;
    Param(std::string n, Matrix v)
        : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

    void zero_grad() {
        for (double& g : grad.vec()) g = 0.0;
    }
};

// Handle to a node on a tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over a linear tape. Nodes are appended in forward
// order; backward() walks them in reverse, so the creation order is the
// topological order. A tape is single-use: build one forward graph, call
// backward() at most once, then discard. Independent tapes may run on
// separate threads; flush_param_grads() is the serial merge point.
class Tape {
public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }

    // Leaves.
    Var constant(Matrix v);
    Var leaf(Matrix v, bool needs_grad);
    Var use(Param& p);  // memoized per tape: one node per Param

    // Core ops. All are differentiable w.r.t. every Var argument that
    // requires gradients; Matrix/vector arguments are treated as constants.
    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var add_many(const std::vector<Var>& vs);
    Var sub(Var a, Var b);
    Var scale(Var a, double c);
    Var transpose(Var a);
    // value(i,j) = a(i,j) + bias(i, 0); bias is a column vector
    Var add_col_broadcast(Var a, Var bias);
    // Column-wise softmax of (temperature * m). Rows listed as true in
    // key_pad_mask are excluded (zero weight, no effect on normalization).
    Var softmax_columns(Var m, double temperature,
                        const std::vector<uint8_t>* key_pad_mask = nullptr);
    // Per-column normalization over the row (channel) axis, then y = gain.*xhat + bias.
    Var layer_norm(Var m, Var gain, Var bias);
    // Per-row normalization over the column (patch) axis, no affine.
    Var instance_norm(Var m);
    Var gelu(Var a);
    // Groups of group_len consecutive columns stacked vertically; input is
    // zero-padded on the right to a multiple of group_len.
    Var repatch(Var a, int group_len);
    Var slice_rows(Var a, int r0, int r1);
    Var slice_cols(Var a, int c0, int c1);
    Var concat_rows(const std::vector<Var>& vs);

    // Scalar-producing ops (1x1 results).
    Var sum_squares(Var a);
    // sum over columns j of sum over rows i < valid_rows[j] of (pred - target)^2
    Var sq_error_columns(Var pred, const Matrix& target, const std::vector<int>& valid_rows);
    Var l1_mean(Var pred, const Matrix& target);
    // logits is (C x 1); returns logsumexp(logits) - logits[label]
    Var cross_entropy_logits(Var logits, int label);

    // Runs reverse accumulation from a 1x1 root (seeded with 1).
    void backward(Var root);
    // Adds every bound leaf's tape gradient into its Param::grad.
    void flush_param_grads();

    const Matrix& value(Var v) const { return val(v.id); }
    const Matrix& grad(Var v) const;
    size_t node_count() const { return nodes_.size(); }

    static constexpr double kNormEps = 1e-5;

private:
    struct Node {
        Matrix value;
        const Matrix* external = nullptr;  // param-backed leaf: no value copy
        Matrix grad;                       // allocated only when needs_grad
        std::function<void(Tape&)> back;
        Param* bound = nullptr;
        bool needs_grad = false;
        const char* op = "leaf";
    };

    Var push(Matrix value, bool needs_grad, const char* op);
    Node& node(Var v) { return nodes_[v.id]; }
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }
    Matrix& g(int id) { return nodes_[id].grad; }
    const Matrix& val(int id) const {
        const Node& n = nodes_[id];
        return n.external ? *n.external : n.value;
    }

    // deque: references returned by value()/grad() stay valid as nodes are appended
    std::deque<Node> nodes_;
    std::unordered_map<const Param*, int> bound_;
    bool grad_enabled_ = true;
    bool backward_done_ = false;
};

}  // namespace csf
