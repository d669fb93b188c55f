#ifndef TIMME_TAPE_HPP
#define TIMME_TAPE_HPP

#include "timme/linalg.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace timme {

/// Handle to a value recorded on a Tape.
struct Var {
    std::int32_t id{-1};
    bool valid() const { return id >= 0; }
};

/// Gradients produced by one backward pass, keyed by parameter slot name.
/// Contains exactly the trainable leaves recorded on the tape.
class GradientMap {
public:
    void set(const std::string& name, Matrix grad) { grads_[name] = std::move(grad); }
    bool has(const std::string& name) const { return grads_.count(name) != 0; }
    const Matrix& at(const std::string& name) const;
    std::size_t size() const { return grads_.size(); }
    auto begin() const { return grads_.begin(); }
    auto end() const { return grads_.end(); }

private:
    std::map<std::string, Matrix> grads_;
};

/// Records a forward pass through the fixed kernel set and replays it in
/// reverse to accumulate adjoints. One tape per training step; values are
/// immutable once pushed.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::int32_t)>;

    /// Trainable leaf; its adjoint is reported under `name` by backward().
    Var leaf(Matrix value, std::string name);
    /// Non-differentiated input.
    Var constant(Matrix value);

    const Matrix& value(Var v) const { return node(v.id).value; }
    std::size_t size() const { return nodes_.size(); }

    /// Reverse accumulation from a 1x1 root. Returns gradients for every
    /// trainable leaf on the tape (zero if the leaf does not reach the root).
    GradientMap backward(Var root);

    // Internal node plumbing, public so the kernel free functions can build
    // nodes without the tape enumerating every op.
    Var push(Matrix value, std::vector<std::int32_t> parents, BackwardFn fn);
    const Matrix& adjoint(std::int32_t id) const { return node(id).grad; }
    void accumulate(std::int32_t id, const Matrix& g);

private:
    struct Node {
        Matrix value;
        Matrix grad;  // empty until reached by backward
        std::vector<std::int32_t> parents;
        BackwardFn backward;
        std::string name;  // nonempty only for trainable leaves
    };

    const Node& node(std::int32_t id) const;
    Node& node(std::int32_t id);

    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Kernels. Each records its backward rule on the tape.
// ---------------------------------------------------------------------------

/// Dense product a*b.
Var matmul(Tape& t, Var a, Var b);

/// Sparse-dense product s*d. The sparse operand is a constant of the
/// computation (adjacency structure); `s` must outlive the tape.
Var spmm(Tape& t, const SpMatrix& s, Var d);

Var add(Tape& t, Var a, Var b);
/// Broadcasts a 1xC row over every row of m.
Var add_row(Tape& t, Var m, Var row);
Var scale(Tape& t, Var a, double k);
Var hadamard(Tape& t, Var a, Var b);
Var relu(Tape& t, Var a);
Var transpose(Tape& t, Var a);

/// Row-wise softmax, stabilized by max subtraction.
Var softmax_rows(Tape& t, Var a);

/// Mean over rows, result 1xC.
Var mean_rows(Tape& t, Var a);
/// Sum of each column, result 1xC.
Var col_sums(Tape& t, Var a);
/// Sum of all entries, result 1x1.
Var sum_all(Tape& t, Var a);

/// Stacks K row vectors (each 1xC) into a KxC matrix.
Var stack_rows(Tape& t, const std::vector<Var>& rows);

/// sum_k weights(0,k) * mats[k]; weights is 1xK.
Var weighted_sum(Tape& t, const std::vector<Var>& mats, Var weights);

/// Rows of the output gathered from a: out.row(b) = a.row(rows[b]).
Var gather_rows(Tape& t, Var a, std::vector<int> rows);

/// Row i of the output is fixed.row(i) where slot_of_row[i] < 0, otherwise
/// trainable.row(slot_of_row[i]). Gradients flow only into the trainable rows.
Var compose_rows(Tape& t, const Matrix& fixed, const std::vector<int>& slot_of_row, Var trainable);

/// Inverted-dropout mask applied to a; `mask` entries are 0 or 1/(1-rate).
Var dropout_mask(Tape& t, Var a, Matrix mask);

/// Batched bilinear-diagonal link score: for pair (i,j),
///   s = sum_k diag_w(k) h(i,k) h(j,k) + v[0:d].h_i + v[d:2d].h_j + b.
/// diag_w is 1xd, v is 1x2d, bias is 1x1; result is Bx1.
Var ntn_scores(Tape& t, Var h, Var diag_w, Var v, Var bias,
               std::vector<std::pair<int, int>> pairs);

/// Summed two-class cross entropy over the listed rows of a row-stochastic
/// probability matrix; label selects the column. Probabilities are clamped
/// below at 1e-12. Result 1x1.
Var cross_entropy_rows(Tape& t, Var probs, std::vector<int> rows, std::vector<int> labels);

/// Summed binary cross entropy of sigmoid(score) against {0,1} labels,
/// computed in the numerically stable logit form. scores is Bx1. Result 1x1.
Var sigmoid_bce_sum(Tape& t, Var scores, std::vector<double> labels);

}  // namespace timme

#endif  // TIMME_TAPE_HPP
