#include <doctest.h>

#include "smf/apps.hpp"
#include "smf/model_io.hpp"
#include "smf/numrank.hpp"
#include "testutil.hpp"

using namespace smf;

TEST_CASE("numeric_rank basics") {
    CHECK(numeric_rank(MatrixXcd::Identity(3, 3)) == 3);
    CHECK(numeric_rank(MatrixXcd::Zero(4, 2)) == 0);

    MatrixXcd w(3, 3);
    w << cxd(1, 0), cxd(0, 0), cxd(1, 0), cxd(0, 0), cxd(1, 0), cxd(-1, 0), cxd(1, 0), cxd(1, 0), cxd(0, 0);
    CHECK(numeric_rank(w) == 2);

    Prng rng(1);
    VectorXcd u = testutil::random_complex_vector(rng, 6);
    VectorXcd v = testutil::random_complex_vector(rng, 4);
    CHECK(numeric_rank(u * v.transpose()) == 1);
}

TEST_CASE("numeric_rank rejects bad input") {
    MatrixXcd m = MatrixXcd::Identity(2, 2);
    CHECK_THROWS_AS(numeric_rank(m, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(numeric_rank(m, 1.0), std::invalid_argument);
    m(0, 0) = cxd(std::numeric_limits<double>::infinity(), 0.0);
    CHECK_THROWS_AS(numeric_rank(m), std::invalid_argument);
}

TEST_CASE("numeric_rank is exactly scale invariant") {
    Prng rng(2);
    for (int t = 0; t < 10; ++t) {
        MatrixXcd m(5, 7);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 7; ++j)
                m(i, j) = rng.complex_gaussian();
        // plant a rank deficiency
        m.row(4) = m.row(0) + m.row(1);
        cxd c = rng.complex_gaussian();
        while (std::abs(c) < 0.01)
            c = rng.complex_gaussian();
        CHECK(numeric_rank(m) == numeric_rank(MatrixXcd(c * m)));
    }
}

TEST_CASE("span_dimension of geometric rows is full") {
    FactorModel m = exp_poly_model(1, {0}, 8).model;
    RankEvidence ev = span_dimension(m.column_model(), 101, m.N + 32);
    CHECK(ev.estimate == 8);
    CHECK(ev.agreement);
    CHECK(ev.gap < kRankTol);
}

TEST_CASE("span_dimension of the sobi model is I^2") {
    FactorModel m = sobi_model(3, 5);
    RankEvidence ev = span_dimension(m.column_model(), 102, m.N + 32);
    CHECK(ev.estimate == 9);
    CHECK(ev.agreement);
}

TEST_CASE("span_dimension of a constant model is 1") {
    ColumnModel cm = ColumnModel::from_template(parse_expression("1 + x1 - x1"), Transform::identity(1), 1, 5);
    RankEvidence ev = span_dimension(cm, 103, 5 + 32);
    CHECK(ev.estimate == 1);
    CHECK(ev.agreement);
}

TEST_CASE("span_dimension enforces the batch precondition") {
    FactorModel m = exp_poly_model(1, {0}, 8).model;
    CHECK_THROWS_AS(span_dimension(m.column_model(), 1, m.N + 9), std::invalid_argument);
}

TEST_CASE("generic_jacobian_rank on a linear model") {
    std::vector<ScalarExpr> rows = {parse_expression("x1 + x3"), parse_expression("x2 - x3"),
                                    parse_expression("x1 + x2")};
    ColumnModel cm = ColumnModel::from_rows(std::move(rows), Transform::identity(3), 3);
    RankEvidence ev = generic_jacobian_rank(cm, 104, 6);
    CHECK(ev.estimate == 2);
    CHECK(ev.agreement);
    for (int r : ev.per_trial)
        CHECK(r == 2);
}

TEST_CASE("generic_jacobian_rank drops by one on sobi and rational models") {
    RankEvidence sobi = generic_jacobian_rank(sobi_model(3, 5).column_model(), 105, 6);
    CHECK(sobi.estimate == 5); // l - 1 with l = 6
    CHECK(sobi.agreement);

    RankEvidence rat = generic_jacobian_rank(rational_model(1, 1, 10).model.column_model(), 106, 6);
    CHECK(rat.estimate == 3); // l - 1 with l = 4
    CHECK(rat.agreement);

    CHECK_THROWS_AS(generic_jacobian_rank(sobi_model(3, 5).column_model(), 1, 4), std::invalid_argument);
}

TEST_CASE("a_full_rank_probe pass and fail shapes") {
    FactorModel tall;
    tall.K = 4;
    tall.N = 3;
    tall.R = 2;
    tall.l = 1;
    tall.columns = ColumnModel::from_template(parse_expression("x1^n"), Transform::identity(1), 1, 3);
    RankEvidence ev = a_full_rank_probe(tall, 107, 4);
    CHECK(ev.estimate == 2);
    CHECK(ev.agreement);

    tall.K = 2;
    tall.R = 4;
    ev = a_full_rank_probe(tall, 108, 4);
    CHECK(ev.estimate == 2); // rank < R: the probe reports the deficiency
    CHECK_THROWS_AS(a_full_rank_probe(tall, 1, 2), std::invalid_argument);
}

TEST_CASE("stacked real and imaginary lag parts reach full rank") {
    SobiInstance inst = SobiInstance::random(5, 5, 9, 999);
    CHECK(numeric_rank(sobi_factor_a(inst)) == 9);
}

TEST_CASE("expression-backed A factors are probed by evaluation") {
    // A(theta) = [[theta1, theta2], [theta2, theta1], [1, theta1]]
    ExpressionA ea;
    ea.param_count = 2;
    for (const char* s : {"x1", "x2", "x2", "x1", "1", "x1"})
        ea.entries.push_back(parse_expression(s));
    FactorModel m;
    m.K = 3;
    m.N = 3;
    m.R = 2;
    m.l = 1;
    m.a_spec = ea;
    m.columns = ColumnModel::from_template(parse_expression("x1^n"), Transform::identity(1), 1, 3);
    RankEvidence ev = a_full_rank_probe(m, 109, 4);
    CHECK(ev.estimate == 2);
    CHECK(ev.agreement);
}

TEST_CASE("rank evidence is deterministic given the seed") {
    FactorModel m = rational_model(1, 1, 10).model;
    RankEvidence a = span_dimension(m.column_model(), 42, m.N + 32);
    RankEvidence b = span_dimension(m.column_model(), 42, m.N + 32);
    CHECK(a.estimate == b.estimate);
    CHECK(a.gap == b.gap);
    CHECK(a.per_trial == b.per_trial);

    RankEvidence c = generic_jacobian_rank(m.column_model(), 42, 7);
    RankEvidence d = generic_jacobian_rank(m.column_model(), 42, 7);
    CHECK(c.per_trial == d.per_trial);
    CHECK(c.gap == d.gap);
}

TEST_CASE("estimates respect the dimension ceilings") {
    for (int i = 0; i < 8; ++i) {
        FactorModel m = testutil::random_family_model(i);
        RankEvidence span = span_dimension(m.column_model(), 200 + i, m.N + 32);
        CHECK(span.estimate <= m.N);
        RankEvidence jr = generic_jacobian_rank(m.column_model(), 300 + i, 5);
        CHECK(jr.estimate <= std::min(m.N, m.l));
    }
}
