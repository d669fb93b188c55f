#include "timme/param_store.hpp"
#include "timme/tape.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace timme;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

SpMatrix random_sparse(Eigen::Index r, Eigen::Index c, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            if (u(rng) < density) trips.emplace_back(i, j, u(rng));
    SpMatrix m(r, c);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

// Verifies autodiff for a forward builder against central differences on
// every parameter in the store.
void check_gradients(ParameterStore& params,
                     const std::function<Var(Tape&, const ParameterStore&)>& build,
                     double tolerance = 1e-6) {
    auto forward = [&](ParameterStore& p) {
        Tape t;
        return t.value(build(t, p))(0, 0);
    };
    auto gradient = [&](ParameterStore& p) {
        Tape t;
        Var loss = build(t, p);
        return t.backward(loss);
    };
    auto report = finite_difference_check(forward, gradient, params, 1e-5, tolerance, 200, 42);
    CAPTURE(report.worst_slot);
    CHECK(report.pass);
    CHECK(report.coords_checked > 0);
}

}  // namespace

TEST_CASE("spmm matches the identity, hand-computed, and annihilator cases") {
    Tape t;
    std::mt19937_64 rng(7);

    SpMatrix eye(3, 3);
    eye.setIdentity();
    Matrix h = random_matrix(3, 2, rng);
    Var hv = t.constant(h);
    CHECK(t.value(spmm(t, eye, hv)).isApprox(h, 1e-15));

    // [[0.5, 0.70711], [0, 1]] * I = itself
    SpMatrix a(2, 2);
    a.insert(0, 0) = 0.5;
    a.insert(0, 1) = 0.70711;
    a.insert(1, 1) = 1.0;
    a.makeCompressed();
    Var id2 = t.constant(Matrix::Identity(2, 2));
    Matrix expect(2, 2);
    expect << 0.5, 0.70711, 0.0, 1.0;
    CHECK(t.value(spmm(t, a, id2)).isApprox(expect, 1e-12));

    SpMatrix zero(2, 2);
    Var any = t.constant(random_matrix(2, 4, rng));
    CHECK(t.value(spmm(t, zero, any)).isZero(0.0));

    SpMatrix bad(3, 3);
    bad.setIdentity();
    CHECK_THROWS(spmm(t, bad, id2));
}

TEST_CASE("spmm agrees with densified matmul to 1e-12") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        SpMatrix s = random_sparse(6, 5, 0.4, rng);
        Matrix d = random_matrix(5, 4, rng);
        Tape t;
        Var dv = t.constant(d);
        Matrix via_sparse = t.value(spmm(t, s, dv));
        Matrix via_dense = densify(s) * d;
        CHECK((via_sparse - via_dense).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("elementwise kernels match their definitions") {
    Tape t;
    Matrix x(1, 2);
    x << -1.0, 2.0;
    Var xv = t.constant(x);
    Matrix r = t.value(relu(t, xv));
    CHECK(r(0, 0) == 0.0);
    CHECK(r(0, 1) == 2.0);

    Matrix z(1, 2);
    z << 0.0, 0.0;
    Matrix sm = t.value(softmax_rows(t, t.constant(z)));
    CHECK(sm(0, 0) == doctest::Approx(0.5));
    CHECK(sm(0, 1) == doctest::Approx(0.5));

    Matrix big(1, 2);
    big << 1000.0, 1000.0;
    Matrix sm2 = t.value(softmax_rows(t, t.constant(big)));
    CHECK(std::isfinite(sm2(0, 0)));
    CHECK(sm2(0, 0) == doctest::Approx(0.5));

    CHECK_THROWS(add(t, xv, t.constant(Matrix::Zero(3, 3))));
    CHECK_THROWS(matmul(t, xv, t.constant(Matrix::Zero(3, 3))));
}

TEST_CASE("softmax rows sum to one and stay strictly positive") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        Tape t;
        Matrix x = random_matrix(4, 6, rng, 30.0);
        Matrix y = t.value(softmax_rows(t, t.constant(x)));
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            CHECK(std::abs(y.row(i).sum() - 1.0) <= 1e-12);
            CHECK(y.row(i).minCoeff() > 0.0);
        }
    }
}

TEST_CASE("matrix products associate within 1e-9") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix a = random_matrix(8, 8, rng), b = random_matrix(8, 8, rng), c = random_matrix(8, 8, rng);
        Tape t;
        Var av = t.constant(a), bv = t.constant(b), cv = t.constant(c);
        Matrix left = t.value(matmul(t, matmul(t, av, bv), cv));
        Matrix right = t.value(matmul(t, av, matmul(t, bv, cv)));
        CHECK((left - right).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("backward handles the linear, relu, and quadratic textbook cases") {
    {
        Tape t;
        Var w = t.leaf(Matrix::Constant(2, 2, 1.5), "w");
        GradientMap g = t.backward(sum_all(t, w));
        CHECK(g.at("w").isApprox(Matrix::Ones(2, 2)));
    }
    {
        Tape t;
        Matrix w0(1, 2);
        w0 << -1.0, 2.0;
        Var w = t.leaf(w0, "w");
        GradientMap g = t.backward(sum_all(t, relu(t, w)));
        CHECK(g.at("w")(0, 0) == 0.0);
        CHECK(g.at("w")(0, 1) == 1.0);
    }
    {
        Tape t;
        Var w = t.leaf(Matrix::Constant(1, 1, 3.0), "w");
        Var loss = scale(t, sum_all(t, hadamard(t, w, w)), 0.5);
        GradientMap g = t.backward(loss);
        CHECK(g.at("w")(0, 0) == doctest::Approx(3.0));
    }
    {
        Tape t;
        Var w = t.leaf(Matrix::Zero(2, 2), "w");
        CHECK_THROWS(t.backward(w));  // non-scalar root
    }
}

TEST_CASE("every kernel composition passes a finite-difference check") {
    std::mt19937_64 rng(17);

    SUBCASE("matmul chain with add, scale, relu") {
        ParameterStore p;
        p.add("a", random_matrix(4, 3, rng));
        p.add("b", random_matrix(3, 5, rng));
        p.add("c", random_matrix(4, 5, rng));
        check_gradients(p, [](Tape& t, const ParameterStore& ps) {
            Var m = matmul(t, ps.use(t, "a"), ps.use(t, "b"));
            Var s = add(t, scale(t, m, 1.7), ps.use(t, "c"));
            return sum_all(t, relu(t, s));
        });
    }

    SUBCASE("spmm with transpose and hadamard") {
        SpMatrix s = random_sparse(6, 4, 0.5, rng);
        ParameterStore p;
        p.add("x", random_matrix(4, 3, rng));
        check_gradients(p, [s](Tape& t, const ParameterStore& ps) {
            Var y = spmm(t, s, ps.use(t, "x"));
            return sum_all(t, hadamard(t, y, transpose(t, transpose(t, y))));
        });
    }

    SUBCASE("softmax pooling stack and weighted sum") {
        ParameterStore p;
        p.add("h0", random_matrix(5, 4, rng));
        p.add("h1", random_matrix(5, 4, rng));
        p.add("h2", random_matrix(5, 4, rng));
        Matrix readout = random_matrix(5, 4, rng);
        check_gradients(p, [readout](Tape& t, const ParameterStore& ps) {
            std::vector<Var> hs{ps.use(t, "h0"), ps.use(t, "h1"), ps.use(t, "h2")};
            std::vector<Var> pooled;
            for (Var h : hs) pooled.push_back(mean_rows(t, h));
            Var stacked = stack_rows(t, pooled);
            Var att = softmax_rows(t, col_sums(t, scale(t, matmul(t, stacked, transpose(t, stacked)), 0.5)));
            Var mixed = softmax_rows(t, weighted_sum(t, hs, att));
            return sum_all(t, hadamard(t, mixed, t.constant(readout)));
        });
    }

    SUBCASE("add_row and gather_rows") {
        ParameterStore p;
        p.add("m", random_matrix(6, 3, rng));
        p.add("bias", random_matrix(1, 3, rng));
        check_gradients(p, [](Tape& t, const ParameterStore& ps) {
            Var out = add_row(t, ps.use(t, "m"), ps.use(t, "bias"));
            return sum_all(t, gather_rows(t, out, {0, 2, 2, 5}));
        });
    }

    SUBCASE("ntn scores") {
        ParameterStore p;
        p.add("h", random_matrix(5, 3, rng));
        p.add("dw", random_matrix(1, 3, rng));
        p.add("v", random_matrix(1, 6, rng));
        p.add("b", random_matrix(1, 1, rng));
        check_gradients(p, [](Tape& t, const ParameterStore& ps) {
            Var s = ntn_scores(t, ps.use(t, "h"), ps.use(t, "dw"), ps.use(t, "v"), ps.use(t, "b"),
                               {{0, 1}, {1, 0}, {2, 4}, {3, 3}});
            return sum_all(t, s);
        });
    }

    SUBCASE("cross entropy over softmax probabilities") {
        ParameterStore p;
        p.add("logits", random_matrix(6, 2, rng));
        check_gradients(p, [](Tape& t, const ParameterStore& ps) {
            Var probs = softmax_rows(t, ps.use(t, "logits"));
            return cross_entropy_rows(t, probs, {0, 2, 4}, {1, 0, 1});
        });
    }

    SUBCASE("sigmoid bce of link scores") {
        ParameterStore p;
        p.add("scores", random_matrix(5, 1, rng, 3.0));
        check_gradients(p, [](Tape& t, const ParameterStore& ps) {
            return sigmoid_bce_sum(t, ps.use(t, "scores"), {1.0, 0.0, 1.0, 1.0, 0.0});
        });
    }

    SUBCASE("compose_rows routes gradients to trainable rows only") {
        ParameterStore p;
        p.add("rows", random_matrix(2, 3, rng));
        Matrix fixed = random_matrix(4, 3, rng);
        std::vector<int> slots{-1, 0, -1, 1};
        check_gradients(p, [fixed, slots](Tape& t, const ParameterStore& ps) {
            Var h = compose_rows(t, fixed, slots, ps.use(t, "rows"));
            return sum_all(t, relu(t, h));
        });
    }
}

TEST_CASE("frozen parameters are excluded from gradient checks and maps") {
    std::mt19937_64 rng(23);
    ParameterStore p;
    p.add("w", random_matrix(2, 2, rng), true);
    p.add("frozen", random_matrix(2, 2, rng), false);

    Tape t;
    Var loss = sum_all(t, matmul(t, p.use(t, "w"), p.use(t, "frozen")));
    GradientMap g = t.backward(loss);
    CHECK(g.has("w"));
    CHECK(!g.has("frozen"));
}

TEST_CASE("quadratic loss passes a tight finite-difference check") {
    std::mt19937_64 rng(29);
    ParameterStore p;
    p.add("w", random_matrix(3, 3, rng));
    auto forward = [](ParameterStore& ps) {
        Tape t;
        Var w = ps.use(t, "w");
        return t.value(scale(t, sum_all(t, hadamard(t, w, w)), 0.5))(0, 0);
    };
    auto gradient = [](ParameterStore& ps) {
        Tape t;
        Var w = ps.use(t, "w");
        Var loss = scale(t, sum_all(t, hadamard(t, w, w)), 0.5);
        return t.backward(loss);
    };
    auto report = finite_difference_check(forward, gradient, p, 1e-5, 1e-6, 100, 1);
    CHECK(report.pass);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("loss kernels match hand-computed values") {
    Tape t;

    // One node, y = 1, p = 0.5: ln 2.
    Matrix probs(1, 2);
    probs << 0.5, 0.5;
    Var l = cross_entropy_rows(t, t.constant(probs), {0}, {1});
    CHECK(t.value(l)(0, 0) == doctest::Approx(std::log(2.0)));

    // y=1 with p=0.8 and y=0 with positive-class p=0.6: -(ln .8 + ln .4).
    Matrix probs2(2, 2);
    probs2 << 0.2, 0.8, 0.4, 0.6;
    Var l2 = cross_entropy_rows(t, t.constant(probs2), {0, 1}, {1, 0});
    CHECK(t.value(l2)(0, 0) == doctest::Approx(1.13943428318688));

    // score 0 label 1 -> ln 2; score 20 label 1 -> ~2.1e-9; empty -> 0.
    Matrix s(1, 1);
    s << 0.0;
    CHECK(t.value(sigmoid_bce_sum(t, t.constant(s), {1.0}))(0, 0) == doctest::Approx(std::log(2.0)));
    Matrix s20(1, 1);
    s20 << 20.0;
    double tail = t.value(sigmoid_bce_sum(t, t.constant(s20), {1.0}))(0, 0);
    CHECK(tail > 0.0);
    CHECK(tail < 1e-8);
    Matrix empty(0, 1);
    CHECK(t.value(sigmoid_bce_sum(t, t.constant(empty), {}))(0, 0) == 0.0);
}

TEST_CASE("ntn kernel matches hand-computed scores") {
    Tape t;
    Matrix h(2, 2);
    h << 1.0, 2.0, 3.0, 4.0;
    Matrix dw(1, 2);
    dw << 1.0, 1.0;
    Matrix v = Matrix::Zero(1, 4);
    Matrix b = Matrix::Zero(1, 1);

    Var hv = t.constant(h);
    Var score = ntn_scores(t, hv, t.constant(dw), t.constant(v), t.constant(b), {{0, 1}});
    CHECK(t.value(score)(0, 0) == doctest::Approx(11.0));  // 1*3 + 2*4

    // Zero embeddings give the bias back.
    Matrix b2 = Matrix::Constant(1, 1, 0.37);
    Var z = t.constant(Matrix::Zero(2, 2));
    Var s2 = ntn_scores(t, z, t.constant(dw), t.constant(v), t.constant(b2), {{0, 1}});
    CHECK(t.value(s2)(0, 0) == doctest::Approx(0.37));

    // Batch of three equals three singles.
    std::mt19937_64 rng(31);
    Matrix hr = random_matrix(4, 3, rng);
    Matrix dwr = random_matrix(1, 3, rng);
    Matrix vr = random_matrix(1, 6, rng);
    Matrix br = random_matrix(1, 1, rng);
    std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}, {3, 0}};
    Var batch = ntn_scores(t, t.constant(hr), t.constant(dwr), t.constant(vr), t.constant(br), pairs);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        Var single = ntn_scores(t, t.constant(hr), t.constant(dwr), t.constant(vr), t.constant(br),
                                {pairs[k]});
        CHECK(std::abs(t.value(batch)(static_cast<Eigen::Index>(k), 0) - t.value(single)(0, 0)) <= 1e-12);
    }

    CHECK_THROWS(ntn_scores(t, hv, t.constant(dw), t.constant(v), t.constant(b), {{0, 9}}));

    // Empty batch stays empty, order is preserved in the batched result.
    Var none = ntn_scores(t, hv, t.constant(dw), t.constant(v), t.constant(b), {});
    CHECK(t.value(none).rows() == 0);
}

TEST_CASE("dropout mask scales surviving entries and gates gradients") {
    Tape t;
    Matrix x(2, 2);
    x << 1.0, 2.0, 3.0, 4.0;
    Matrix mask(2, 2);
    mask << 2.0, 0.0, 0.0, 2.0;  // rate 0.5, inverted scaling
    Var xv = t.leaf(x, "x");
    Var dropped = dropout_mask(t, xv, mask);
    CHECK(t.value(dropped)(0, 0) == 2.0);
    CHECK(t.value(dropped)(0, 1) == 0.0);
    GradientMap g = t.backward(sum_all(t, dropped));
    CHECK(g.at("x")(0, 0) == 2.0);
    CHECK(g.at("x")(1, 0) == 0.0);
}
