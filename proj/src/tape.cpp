#include "timme/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace timme {

const Matrix& GradientMap::at(const std::string& name) const {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw std::out_of_range("GradientMap: no gradient for '" + name + "'");
    return it->second;
}

const Tape::Node& Tape::node(std::int32_t id) const {
    if (id < 0 || id >= static_cast<std::int32_t>(nodes_.size()))
        throw std::out_of_range("Tape: invalid node id");
    return nodes_[static_cast<std::size_t>(id)];
}

Tape::Node& Tape::node(std::int32_t id) {
    return const_cast<Node&>(static_cast<const Tape*>(this)->node(id));
}

Var Tape::push(Matrix value, std::vector<std::int32_t> parents, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    n.parents = std::move(parents);
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Matrix value, std::string name) {
    Var v = push(std::move(value), {}, nullptr);
    node(v.id).name = std::move(name);
    return v;
}

Var Tape::constant(Matrix value) { return push(std::move(value), {}, nullptr); }

void Tape::accumulate(std::int32_t id, const Matrix& g) {
    Node& n = node(id);
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

GradientMap Tape::backward(Var root) {
    const Node& r = node(root.id);
    if (r.value.rows() != 1 || r.value.cols() != 1)
        throw std::invalid_argument("backward: root must be a 1x1 scalar");

    accumulate(root.id, Matrix::Ones(1, 1));
    for (std::int32_t id = root.id; id >= 0; --id) {
        Node& n = node(id);
        if (n.grad.size() == 0 || !n.backward) continue;
        n.backward(*this, id);
    }

    GradientMap out;
    for (const Node& n : nodes_) {
        if (n.name.empty()) continue;
        if (n.grad.size() == 0) {
            out.set(n.name, Matrix::Zero(n.value.rows(), n.value.cols()));
        } else {
            out.set(n.name, n.grad);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_mul_shapes(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(op) + ": operand shapes disagree");
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
    const Matrix& A = t.value(a);
    const Matrix& B = t.value(b);
    check_mul_shapes(A, B);
    return t.push(A * B, {a.id, b.id}, [a, b](Tape& tp, std::int32_t id) {
        const Matrix& g = tp.adjoint(id);
        tp.accumulate(a.id, g * tp.value(b).transpose());
        tp.accumulate(b.id, tp.value(a).transpose() * g);
    });
}

Var spmm(Tape& t, const SpMatrix& s, Var d) {
    const Matrix& D = t.value(d);
    if (s.cols() != D.rows())
        throw std::invalid_argument("spmm: inner dimensions disagree (" +
                                    std::to_string(s.cols()) + " vs " + std::to_string(D.rows()) + ")");
    const SpMatrix* sp = &s;
    return t.push(s * D, {d.id}, [sp, d](Tape& tp, std::int32_t id) {
        tp.accumulate(d.id, sp->transpose() * tp.adjoint(id));
    });
}

Var add(Tape& t, Var a, Var b) {
    check_same_shape(t.value(a), t.value(b), "add");
    return t.push(t.value(a) + t.value(b), {a.id, b.id}, [a, b](Tape& tp, std::int32_t id) {
        tp.accumulate(a.id, tp.adjoint(id));
        tp.accumulate(b.id, tp.adjoint(id));
    });
}

Var add_row(Tape& t, Var m, Var row) {
    const Matrix& M = t.value(m);
    const Matrix& r = t.value(row);
    if (r.rows() != 1 || r.cols() != M.cols())
        throw std::invalid_argument("add_row: row vector shape disagrees with matrix");
    Matrix out = M.rowwise() + r.row(0);
    return t.push(std::move(out), {m.id, row.id}, [m, row](Tape& tp, std::int32_t id) {
        const Matrix& g = tp.adjoint(id);
        tp.accumulate(m.id, g);
        tp.accumulate(row.id, g.colwise().sum());
    });
}

Var scale(Tape& t, Var a, double k) {
    return t.push(t.value(a) * k, {a.id}, [a, k](Tape& tp, std::int32_t id) {
        tp.accumulate(a.id, tp.adjoint(id) * k);
    });
}

Var hadamard(Tape& t, Var a, Var b) {
    check_same_shape(t.value(a), t.value(b), "hadamard");
    Matrix out = t.value(a).cwiseProduct(t.value(b));
    return t.push(std::move(out), {a.id, b.id}, [a, b](Tape& tp, std::int32_t id) {
        const Matrix& g = tp.adjoint(id);
        tp.accumulate(a.id, g.cwiseProduct(tp.value(b)));
        tp.accumulate(b.id, g.cwiseProduct(tp.value(a)));
    });
}

Var relu(Tape& t, Var a) {
    Matrix out = t.value(a).cwiseMax(0.0);
    // Subgradient at exactly 0 is 0: mask on strict positivity of the input.
    return t.push(std::move(out), {a.id}, [a](Tape& tp, std::int32_t id) {
        Matrix mask = (tp.value(a).array() > 0.0).cast<double>();
        tp.accumulate(a.id, tp.adjoint(id).cwiseProduct(mask));
    });
}

Var transpose(Tape& t, Var a) {
    return t.push(t.value(a).transpose(), {a.id}, [a](Tape& tp, std::int32_t id) {
        tp.accumulate(a.id, tp.adjoint(id).transpose());
    });
}

Var softmax_rows(Tape& t, Var a) {
    const Matrix& X = t.value(a);
    Matrix out(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double m = X.row(i).maxCoeff();
        Eigen::ArrayXd e = (X.row(i).array() - m).exp();
        out.row(i) = (e / e.sum()).matrix();
    }
    Var v = t.push(std::move(out), {a.id}, [a](Tape& tp, std::int32_t id) {
        const Matrix& y = tp.value(Var{id});
        const Matrix& g = tp.adjoint(id);
        Matrix dx(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double dot = g.row(i).dot(y.row(i));
            dx.row(i) = y.row(i).cwiseProduct(g.row(i) - RowVector::Constant(y.cols(), dot));
        }
        tp.accumulate(a.id, dx);
    });
    return v;
}

Var mean_rows(Tape& t, Var a) {
    const Matrix& X = t.value(a);
    Matrix out = X.colwise().mean();
    const double n = static_cast<double>(X.rows());
    return t.push(std::move(out), {a.id}, [a, n](Tape& tp, std::int32_t id) {
        const Matrix& g = tp.adjoint(id);
        Matrix dx = Matrix::Ones(static_cast<Eigen::Index>(n), 1) * (g / n);
        tp.accumulate(a.id, dx);
    });
}

Var col_sums(Tape& t, Var a) {
    const Matrix& X = t.value(a);
    Matrix out = X.colwise().sum();
    const Eigen::Index n = X.rows();
    return t.push(std::move(out), {a.id}, [a, n](Tape& tp, std::int32_t id) {
        tp.accumulate(a.id, Matrix::Ones(n, 1) * tp.adjoint(id));
    });
}

Var sum_all(Tape& t, Var a) {
    const Matrix& X = t.value(a);
    Matrix out(1, 1);
    out(0, 0) = X.sum();
    const Eigen::Index r = X.rows(), c = X.cols();
    return t.push(std::move(out), {a.id}, [a, r, c](Tape& tp, std::int32_t id) {
        tp.accumulate(a.id, Matrix::Constant(r, c, tp.adjoint(id)(0, 0)));
    });
}

Var stack_rows(Tape& t, const std::vector<Var>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: empty input");
    const Eigen::Index c = t.value(rows[0]).cols();
    Matrix out(static_cast<Eigen::Index>(rows.size()), c);
    std::vector<std::int32_t> parents;
    parents.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Matrix& r = t.value(rows[k]);
        if (r.rows() != 1 || r.cols() != c)
            throw std::invalid_argument("stack_rows: all inputs must be 1xC rows of equal width");
        out.row(static_cast<Eigen::Index>(k)) = r.row(0);
        parents.push_back(rows[k].id);
    }
    std::vector<Var> rs = rows;
    return t.push(std::move(out), std::move(parents), [rs](Tape& tp, std::int32_t id) {
        const Matrix& g = tp.adjoint(id);
        for (std::size_t k = 0; k < rs.size(); ++k)
            tp.accumulate(rs[k].id, g.row(static_cast<Eigen::Index>(k)));
    });
}

Var weighted_sum(Tape& t, const std::vector<Var>& mats, Var weights) {
    if (mats.empty()) throw std::invalid_argument("weighted_sum: empty input");
    const Matrix& w = t.value(weights);
    if (w.rows() != 1 || w.cols() != static_cast<Eigen::Index>(mats.size()))
        throw std::invalid_argument("weighted_sum: weight vector must be 1xK");
    Matrix out = Matrix::Zero(t.value(mats[0]).rows(), t.value(mats[0]).cols());
    std::vector<std::int32_t> parents;
    for (std::size_t k = 0; k < mats.size(); ++k) {
        check_same_shape(t.value(mats[k]), out, "weighted_sum");
        out += w(0, static_cast<Eigen::Index>(k)) * t.value(mats[k]);
        parents.push_back(mats[k].id);
    }
    parents.push_back(weights.id);
    std::vector<Var> ms = mats;
    return t.push(std::move(out), std::move(parents), [ms, weights](Tape& tp, std::int32_t id) {
        const Matrix& g = tp.adjoint(id);
        const Matrix& w = tp.value(weights);
        Matrix dw = Matrix::Zero(1, w.cols());
        for (std::size_t k = 0; k < ms.size(); ++k) {
            const Eigen::Index ki = static_cast<Eigen::Index>(k);
            tp.accumulate(ms[k].id, w(0, ki) * g);
            dw(0, ki) = g.cwiseProduct(tp.value(ms[k])).sum();
        }
        tp.accumulate(weights.id, dw);
    });
}

Var gather_rows(Tape& t, Var a, std::vector<int> rows) {
    const Matrix& X = t.value(a);
    Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t b = 0; b < rows.size(); ++b) {
        if (rows[b] < 0 || rows[b] >= X.rows())
            throw std::out_of_range("gather_rows: row index out of range");
        out.row(static_cast<Eigen::Index>(b)) = X.row(rows[b]);
    }
    return t.push(std::move(out), {a.id}, [a, rows = std::move(rows)](Tape& tp, std::int32_t id) {
        const Matrix& g = tp.adjoint(id);
        Matrix dx = Matrix::Zero(tp.value(a).rows(), tp.value(a).cols());
        for (std::size_t b = 0; b < rows.size(); ++b)
            dx.row(rows[b]) += g.row(static_cast<Eigen::Index>(b));
        tp.accumulate(a.id, dx);
    });
}

Var compose_rows(Tape& t, const Matrix& fixed, const std::vector<int>& slot_of_row, Var trainable) {
    const Matrix& T = t.value(trainable);
    if (static_cast<Eigen::Index>(slot_of_row.size()) != fixed.rows())
        throw std::invalid_argument("compose_rows: slot map length disagrees with fixed rows");
    Matrix out = fixed;
    for (std::size_t i = 0; i < slot_of_row.size(); ++i) {
        int s = slot_of_row[i];
        if (s < 0) continue;
        if (s >= T.rows()) throw std::out_of_range("compose_rows: trainable slot out of range");
        out.row(static_cast<Eigen::Index>(i)) = T.row(s);
    }
    std::vector<int> slots = slot_of_row;
    return t.push(std::move(out), {trainable.id},
                  [trainable, slots = std::move(slots)](Tape& tp, std::int32_t id) {
                      const Matrix& g = tp.adjoint(id);
                      const Matrix& T = tp.value(trainable);
                      Matrix dT = Matrix::Zero(T.rows(), T.cols());
                      for (std::size_t i = 0; i < slots.size(); ++i)
                          if (slots[i] >= 0) dT.row(slots[i]) += g.row(static_cast<Eigen::Index>(i));
                      tp.accumulate(trainable.id, dT);
                  });
}

Var dropout_mask(Tape& t, Var a, Matrix mask) {
    check_same_shape(t.value(a), mask, "dropout_mask");
    Matrix out = t.value(a).cwiseProduct(mask);
    return t.push(std::move(out), {a.id}, [a, mask = std::move(mask)](Tape& tp, std::int32_t id) {
        tp.accumulate(a.id, tp.adjoint(id).cwiseProduct(mask));
    });
}

Var ntn_scores(Tape& t, Var h, Var diag_w, Var v, Var bias,
               std::vector<std::pair<int, int>> pairs) {
    const Matrix& H = t.value(h);
    const Matrix& W = t.value(diag_w);
    const Matrix& V = t.value(v);
    const Matrix& B = t.value(bias);
    const Eigen::Index d = H.cols();
    if (W.rows() != 1 || W.cols() != d) throw std::invalid_argument("ntn_scores: diag_w must be 1xd");
    if (V.rows() != 1 || V.cols() != 2 * d) throw std::invalid_argument("ntn_scores: v must be 1x2d");
    if (B.rows() != 1 || B.cols() != 1) throw std::invalid_argument("ntn_scores: bias must be 1x1");

    Matrix out(static_cast<Eigen::Index>(pairs.size()), 1);
    for (std::size_t b = 0; b < pairs.size(); ++b) {
        auto [i, j] = pairs[b];
        if (i < 0 || i >= H.rows() || j < 0 || j >= H.rows())
            throw std::out_of_range("ntn_scores: node index out of range");
        // w . (h_i ⊙ h_j): the elementwise product is symmetric in (i, j), so
        // the score with v = 0 is bit-identical under pair swap.
        double bilinear = W.row(0).dot(H.row(i).cwiseProduct(H.row(j)));
        double linear = V.row(0).head(d).dot(H.row(i)) + V.row(0).tail(d).dot(H.row(j));
        out(static_cast<Eigen::Index>(b), 0) = bilinear + linear + B(0, 0);
    }
    return t.push(std::move(out), {h.id, diag_w.id, v.id, bias.id},
                  [h, diag_w, v, bias, pairs = std::move(pairs)](Tape& tp, std::int32_t id) {
                      const Matrix& g = tp.adjoint(id);
                      const Matrix& H = tp.value(h);
                      const Matrix& W = tp.value(diag_w);
                      const Matrix& V = tp.value(v);
                      const Eigen::Index d = H.cols();
                      Matrix dH = Matrix::Zero(H.rows(), d);
                      Matrix dW = Matrix::Zero(1, d);
                      Matrix dV = Matrix::Zero(1, 2 * d);
                      Matrix dB = Matrix::Zero(1, 1);
                      for (std::size_t b = 0; b < pairs.size(); ++b) {
                          auto [i, j] = pairs[b];
                          double gb = g(static_cast<Eigen::Index>(b), 0);
                          dH.row(i) += gb * (W.row(0).cwiseProduct(H.row(j)) + V.row(0).head(d));
                          dH.row(j) += gb * (W.row(0).cwiseProduct(H.row(i)) + V.row(0).tail(d));
                          dW += gb * H.row(i).cwiseProduct(H.row(j));
                          dV.row(0).head(d) += gb * H.row(i);
                          dV.row(0).tail(d) += gb * H.row(j);
                          dB(0, 0) += gb;
                      }
                      tp.accumulate(h.id, dH);
                      tp.accumulate(diag_w.id, dW);
                      tp.accumulate(v.id, dV);
                      tp.accumulate(bias.id, dB);
                  });
}

Var cross_entropy_rows(Tape& t, Var probs, std::vector<int> rows, std::vector<int> labels) {
    const Matrix& P = t.value(probs);
    if (rows.size() != labels.size())
        throw std::invalid_argument("cross_entropy_rows: rows/labels length mismatch");
    constexpr double kClamp = 1e-12;
    double loss = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        int i = rows[k], y = labels[k];
        if (i < 0 || i >= P.rows()) throw std::out_of_range("cross_entropy_rows: row out of range");
        if (y < 0 || y >= P.cols()) throw std::out_of_range("cross_entropy_rows: label out of range");
        loss -= std::log(std::max(P(i, y), kClamp));
    }
    Matrix out(1, 1);
    out(0, 0) = loss;
    return t.push(std::move(out), {probs.id},
                  [probs, rows = std::move(rows), labels = std::move(labels)](Tape& tp, std::int32_t id) {
                      double g = tp.adjoint(id)(0, 0);
                      const Matrix& P = tp.value(probs);
                      Matrix dP = Matrix::Zero(P.rows(), P.cols());
                      for (std::size_t k = 0; k < rows.size(); ++k) {
                          double p = P(rows[k], labels[k]);
                          if (p < kClamp) continue;  // clamped region is flat
                          dP(rows[k], labels[k]) -= g / p;
                      }
                      tp.accumulate(probs.id, dP);
                  });
}

Var sigmoid_bce_sum(Tape& t, Var scores, std::vector<double> labels) {
    const Matrix& S = t.value(scores);
    if (S.cols() != 1) throw std::invalid_argument("sigmoid_bce_sum: scores must be Bx1");
    if (static_cast<std::size_t>(S.rows()) != labels.size())
        throw std::invalid_argument("sigmoid_bce_sum: scores/labels length mismatch");
    double loss = 0.0;
    for (Eigen::Index b = 0; b < S.rows(); ++b) {
        double s = S(b, 0), y = labels[static_cast<std::size_t>(b)];
        loss += std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
    }
    Matrix out(1, 1);
    out(0, 0) = loss;
    return t.push(std::move(out), {scores.id},
                  [scores, labels = std::move(labels)](Tape& tp, std::int32_t id) {
                      double g = tp.adjoint(id)(0, 0);
                      const Matrix& S = tp.value(scores);
                      Matrix dS(S.rows(), 1);
                      for (Eigen::Index b = 0; b < S.rows(); ++b) {
                          double sig = 1.0 / (1.0 + std::exp(-S(b, 0)));
                          dS(b, 0) = g * (sig - labels[static_cast<std::size_t>(b)]);
                      }
                      tp.accumulate(scores.id, dS);
                  });
}

}  // namespace timme
