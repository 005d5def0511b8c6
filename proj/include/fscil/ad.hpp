#pragma once

#include <functional>
#include <vector>

#include "fscil/data.hpp"

namespace fscil::ad {

// Reverse-mode tape over Eigen double matrices. A Tape built with
// record=false computes values only (inference); ops are identical either
// way, so train and eval share one forward definition.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

class Tape {
public:
    explicit Tape(bool record = true) : record_(record) {}

    bool recording() const { return record_; }

    // Leaf without gradient (data, frozen weights).
    Var constant(Matrix value);
    // Leaf with gradient when the tape records.
    Var leaf(Matrix value);

    const Matrix& value(Var v) const { return node(v).value; }
    // Gradient after backward(); zero matrix if the leaf was never reached.
    const Matrix& grad(Var v);
    bool requires_grad(Var v) const { return node(v).requires_grad; }

    // --- elementwise / structural ---------------------------------------
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double s);           // s * a
    Var mul(Var a, Var b);                // hadamard
    Var relu(Var a);
    Var concat_rows(Var a, Var b);
    Var add_row_broadcast(Var a, Var bias);  // bias is (1, cols)

    // --- linear algebra ---------------------------------------------------
    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);          // a * b^T
    Var row_l2_normalize(Var a);          // throws ZeroNormVector on zero rows

    // --- reductions / metrics ----------------------------------------------
    // group-wise row mean: groups[i] in [0, n_groups), every group non-empty
    Var group_mean_rows(Var a, const std::vector<int>& groups, int n_groups);
    // -(|e_i - w_j|^2)/d with d = cols
    Var sqeuclid_scores(Var emb, Var w);
    // mean over rows of (logsumexp(row) - row[label]); returns (1,1)
    Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);

    // --- spatial ops (inputs flattened channel-major, per-sample rows) -----
    struct Conv2dSpec {
        int in_c, in_h, in_w;
        int out_c;
        int kernel = 3;
        int stride = 1;
        int pad = 1;
        int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
        int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
    };
    // kernel var shaped (out_c, in_c*k*k); bias (1, out_c)
    Var conv2d(Var x, Var kernel, Var bias, const Conv2dSpec& spec);
    Var avgpool2x2(Var x, int c, int h, int w);
    Var global_avg_pool(Var x, int c, int h, int w);
    // Batch norm over (n, h, w) per channel. When `training`, batch statistics
    // are used and running stats (owned by the caller) are updated in place;
    // otherwise running stats normalize.
    Var batchnorm2d(Var x, Var gamma, Var beta, Matrix& running_mean, Matrix& running_var,
                    int c, int h, int w, bool training, double momentum = 0.1,
                    double eps = 1e-5);

    // Accumulates gradients of all grad-leaves reachable from `root` (1x1).
    void backward(Var root);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&)> backprop;
        bool requires_grad = false;
    };

    Node& node(Var v) { return nodes_.at(static_cast<size_t>(v.id)); }
    const Node& node(Var v) const { return nodes_.at(static_cast<size_t>(v.id)); }
    Var push(Matrix value, bool requires_grad, std::function<void(Tape&)> backprop);
    Matrix& grad_ref(Var v);
    void accumulate(Var v, const Matrix& g);

    std::vector<Node> nodes_;
    bool record_;
};

}  // namespace fscil::ad
