#include <doctest.h>

#include "smf/apps.hpp"
#include "smf/model.hpp"
#include "smf/model_io.hpp"
#include "testutil.hpp"

using namespace smf;

namespace {

const char* kRationalSpec = R"(# sampled rational sources
[dims] K=10 N=10 R=7 l=4
[domain] complex
[A] generic
[column] b_n = (x1 + x2*n)/(x3 + x4*n)
[scaling_invariant] true
)";

ColumnModel rational_cm(int p, int q, int N) { return rational_model(p, q, N).model.column_model(); }

} // namespace

TEST_CASE("parse_model on a rational spec") {
    FactorModel m = parse_model(kRationalSpec);
    CHECK(m.K == 10);
    CHECK(m.N == 10);
    CHECK(m.R == 7);
    CHECK(m.l == 4);
    CHECK(m.domain == Domain::Complex);
    CHECK(m.scaling == ScalingFlag::DeclaredTrue);
    CHECK(m.column_model().rows() == 10);

    // row 3 is (x1 + 3 x2)/(x3 + 3 x4)
    VectorXcd x(4);
    x << cxd(1, 0), cxd(2, 0), cxd(1, 0), cxd(0, 0);
    VectorXcd r = eval_r(m.column_model(), x);
    CHECK(std::abs(r(2) - cxd(7.0, 0.0)) < 1e-15);
}

TEST_CASE("parse_model rejects unknown primitives with location") {
    std::string bad = std::string(kRationalSpec) + "[transform] f1 = sinh\n";
    try {
        parse_model(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("unknown primitive") != std::string::npos);
        CHECK(e.line == 7);
    }
}

TEST_CASE("parse_model diagnostics") {
    CHECK_THROWS_AS(parse_model("[domain] complex\n"), ParseError); // missing dims/column
    CHECK_THROWS_AS(parse_model("[dims] K=2 N=2 R=1 l=1\n[column] b_n = x7\n"), ParseError); // x7 > l
    CHECK_THROWS_AS(parse_model("[dims] K=2 N=2 R=1 l=1\n[column] b_1 = x1\n"), ParseError); // missing b_2
    CHECK_THROWS_AS(parse_model("[dims] K=2 N=2 R=1 l=1\n[column] b_n = x1\n[domain] rational\n"), ParseError);
    CHECK_THROWS_AS(parse_model("[dims] K=2 N=2 R=1 l=1\n[banana] yes\n[column] b_n = x1\n"), ParseError);
    CHECK_THROWS_AS(parse_model("[dims] K=2 N=2 R=1 l=1\n[column] b_n = x1/(x1 - x1)\n"), ParseError); // zero denominator
}

TEST_CASE("sobi spec round-trips through the file format") {
    FactorModel m = sobi_model(3, 5);
    std::string text = serialize_model(m);
    FactorModel back = parse_model(text);
    CHECK(back.N == 9);
    CHECK(back.l == 6);
    CHECK(back.K == 10);
    CHECK(back.scaling == ScalingFlag::DeclaredTrue);
    Prng rng(5);
    for (int t = 0; t < 10; ++t) {
        VectorXcd z = testutil::random_complex_vector(rng, 6);
        CHECK((eval_b(back.column_model(), z) - eval_b(m.column_model(), z)).norm() < 1e-14);
    }
}

TEST_CASE("parser round-trip evaluates identically across families") {
    Prng rng(31);
    FactorModel models[] = {rational_model(2, 1, 9).model, exp_poly_model(1, {1}, 8).model, example_model(9).model};
    for (const FactorModel& m : models) {
        FactorModel back = parse_model(serialize_model(m));
        for (int t = 0; t < 10; ++t) {
            // stay pole-free: small real points work for all three families
            VectorXcd z = 0.3 * testutil::random_real_vector(rng, m.l);
            VectorXcd a = eval_b(m.column_model(), z);
            VectorXcd b = eval_b(back.column_model(), z);
            CHECK((a - b).norm() < 1e-12 * (1.0 + a.norm()));
        }
    }
}

TEST_CASE("eval_r constant ratio") {
    ColumnModel cm = ColumnModel::from_template(parse_expression("x1/x2"), Transform::identity(2), 2, 4);
    VectorXcd x(2);
    x << cxd(2, 0), cxd(4, 0);
    VectorXcd r = eval_r(cm, x);
    for (int n = 0; n < 4; ++n)
        CHECK(r(n) == cxd(0.5, 0.0));
}

TEST_CASE("eval_r geometric rows") {
    ColumnModel cm = ColumnModel::from_template(parse_expression("x2*x1^n"), Transform::identity(2), 2, 3);
    VectorXcd x(2);
    x << cxd(2, 0), cxd(1, 0);
    VectorXcd r = eval_r(cm, x);
    CHECK(r(0) == cxd(2, 0));
    CHECK(r(1) == cxd(4, 0));
    CHECK(r(2) == cxd(8, 0));
}

TEST_CASE("rational rows reproduce the shifted reciprocal columns") {
    // x = (1, 0, k, 1) turns (x1 + x2 n)/(x3 + x4 n) into 1/(k+n).
    ColumnModel cm = rational_cm(1, 1, 6);
    for (int k = 0; k < 6; ++k) {
        VectorXcd x(4);
        x << cxd(1, 0), cxd(0, 0), cxd(k, 0), cxd(1, 0);
        VectorXcd col = eval_r(cm, x);
        for (int n = 1; n <= 6; ++n)
            CHECK(std::abs(col(n - 1) - cxd(1.0 / (k + n), 0.0)) < 1e-15);
    }
}

TEST_CASE("pole guard raises instead of returning non-finite") {
    ColumnModel cm = rational_cm(1, 1, 6);
    VectorXcd x(4);
    x << cxd(1, 0), cxd(0, 0), cxd(-3, 0), cxd(1, 0); // row 3 denominator = 0
    try {
        eval_r(cm, x);
        FAIL("expected PoleError");
    } catch (const PoleError& e) {
        CHECK(e.row == 3);
    }
}

TEST_CASE("eval_b composes the transform") {
    // Vandermonde rows x1^(n-1) through f = exp; at zeta = 0 all entries are 1.
    Transform t;
    t.coords = {Transform1d{TransformKind::Exp, 0, 0}};
    ColumnModel cm = ColumnModel::from_template(parse_expression("x1^n/x1"), std::move(t), 1, 5);
    VectorXcd zeta = VectorXcd::Zero(1);
    VectorXcd b = eval_b(cm, zeta);
    for (int n = 0; n < 5; ++n)
        CHECK(std::abs(b(n) - cxd(1, 0)) < 1e-15);

    // identity transform: eval_b == eval_r
    ColumnModel id_cm = rational_cm(1, 2, 7);
    Prng rng(8);
    VectorXcd x = testutil::random_complex_vector(rng, id_cm.vars());
    CHECK((eval_b(id_cm, x) - eval_r(id_cm, x)).norm() == 0.0);
}

TEST_CASE("transform singularities are reported") {
    Transform t;
    t.coords = {Transform1d{TransformKind::TanHalf, 0, 0}};
    ColumnModel cm = ColumnModel::from_template(parse_expression("x1"), std::move(t), 1, 2);
    VectorXcd zeta(1);
    zeta << cxd(M_PI, 0.0);
    CHECK_THROWS_AS(eval_b(cm, zeta), TransformSingular);
}

TEST_CASE("example model matches the direct trigonometric form") {
    ModelWithBound ex = example_model(12);
    Prng rng(17);
    int checked = 0;
    while (checked < 20) {
        Eigen::VectorXd z(6);
        for (int j = 0; j < 6; ++j)
            z(j) = rng.gaussian();
        if (std::abs(std::cos(z(3) / 2.0)) < 0.05 || std::abs(std::cos(z(4) / 2.0)) < 0.05)
            continue;
        VectorXcd zeta = z.cast<cxd>();
        VectorXcd b = eval_b(ex.model.column_model(), zeta);
        double worst = 0.0;
        for (int n = 1; n <= 12; ++n) {
            double oracle = testutil::example_signal(z, n);
            worst = std::max(worst, std::abs(b(n - 1) - cxd(oracle, 0.0)) / (1.0 + std::abs(oracle)));
        }
        CHECK(worst < 1e-10);
        ++checked;
    }
}

TEST_CASE("jacobian of a linear model is its matrix") {
    std::vector<ScalarExpr> rows = {parse_expression("x1 + x3"), parse_expression("x2 - x3"),
                                    parse_expression("x1 + x2")};
    ColumnModel cm = ColumnModel::from_rows(std::move(rows), Transform::identity(3), 3);
    MatrixXcd w(3, 3);
    w << cxd(1, 0), cxd(0, 0), cxd(1, 0), cxd(0, 0), cxd(1, 0), cxd(-1, 0), cxd(1, 0), cxd(1, 0), cxd(0, 0);
    Prng rng(3);
    for (int t = 0; t < 5; ++t) {
        VectorXcd x = testutil::random_complex_vector(rng, 3);
        CHECK((jacobian_r(cm, x) - w).norm() < 1e-14);
    }
}

TEST_CASE("constant rows have zero jacobian rows") {
    std::vector<ScalarExpr> rows = {parse_expression("3"), parse_expression("x1^2")};
    ColumnModel cm = ColumnModel::from_rows(std::move(rows), Transform::identity(1), 1);
    VectorXcd x(1);
    x << cxd(2, 1);
    MatrixXcd j = jacobian_r(cm, x);
    CHECK(std::abs(j(0, 0)) == 0.0);
    CHECK(std::abs(j(1, 0) - cxd(4, 2)) < 1e-14);
}

TEST_CASE("sobi jacobian annihilates the rotation direction") {
    const int I = 3;
    FactorModel m = sobi_model(I, 5);
    Prng rng(11);
    for (int t = 0; t < 20; ++t) {
        VectorXcd x = testutil::random_complex_vector(rng, 2 * I);
        MatrixXcd j = jacobian_r(m.column_model(), x);
        VectorXcd dir(2 * I);
        dir.head(I) = x.tail(I);
        dir.tail(I) = -x.head(I);
        CHECK((j * dir).norm() < 1e-10 * j.norm() * dir.norm());
    }
}

TEST_CASE("jacobian_f diagonal entries") {
    Transform t = Transform::identity(2);
    VectorXcd zeta(2);
    zeta << cxd(0.3, 0), cxd(-1.2, 0);
    CHECK((jacobian_f(t, zeta) - MatrixXcd::Identity(2, 2)).norm() == 0.0);

    Transform th;
    th.coords = {Transform1d{TransformKind::TanHalf, 0, 0}};
    VectorXcd z0 = VectorXcd::Zero(1);
    CHECK(std::abs(jacobian_f(th, z0)(0, 0) - cxd(0.5, 0.0)) < 1e-15);

    // the worked example's transform has nonzero derivative at the all-ones point
    ModelWithBound ex = example_model(8);
    VectorXcd ones = VectorXcd::Constant(6, cxd(1.0, 0.0));
    MatrixXcd jf = jacobian_f(ex.model.column_model().transform(), ones);
    for (int j = 0; j < 6; ++j)
        CHECK(std::abs(jf(j, j)) > 1e-6);
}

TEST_CASE("forward-mode jacobian agrees with central differences") {
    double worst = 0.0;
    int pair = 0;
    for (int i = 0; pair < 50; ++i) {
        FactorModel m = testutil::random_family_model(i);
        Prng rng = Prng::derived(777, static_cast<std::uint64_t>(i));
        VectorXcd x = 0.5 * testutil::random_complex_vector(rng, m.l);
        MatrixXcd ad, fd;
        try {
            // near-pole rows make the finite-difference reference itself
            // inaccurate; resample those points
            if (eval_r(m.column_model(), x).lpNorm<Eigen::Infinity>() > 1e3)
                continue;
            ad = jacobian_r(m.column_model(), x);
            fd = testutil::fd_jacobian_r(m.column_model(), x);
        } catch (const PoleError&) {
            continue;
        }
        for (int r = 0; r < ad.rows(); ++r)
            for (int c = 0; c < ad.cols(); ++c)
                worst = std::max(worst, std::abs(ad(r, c) - fd(r, c)) / (1.0 + std::abs(ad(r, c))));
        ++pair;
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("jacobian_b equals the chain-rule product") {
    Prng rng(23);
    int done = 0;
    for (int i = 0; done < 20; ++i) {
        FactorModel m = testutil::random_family_model(i);
        VectorXcd zeta = 0.4 * testutil::random_complex_vector(rng, m.l);
        try {
            MatrixXcd direct = jacobian_b(m.column_model(), zeta);
            VectorXcd fx = m.column_model().transform().apply(zeta);
            MatrixXcd product = jacobian_r(m.column_model(), fx) * jacobian_f(m.column_model().transform(), zeta);
            CHECK((direct - product).norm() < 1e-9 * (1.0 + product.norm()));
            ++done;
        } catch (const PoleError&) {
        } catch (const TransformSingular&) {
        }
    }
}

TEST_CASE("factor model validation") {
    FactorModel m = rational_model(1, 1, 10).model;
    m.N = 11; // rows no longer match
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m.N = 10;
    m.l = 3;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("dual vector invariants") {
    DualVector c = DualVector::constant(cxld(5.0L, -1.0L), 3);
    for (const auto& p : c.partials)
        CHECK(p == cxld(0.0L));
    DualVector v2 = DualVector::variable(cxld(2.0L), 2, 3);
    CHECK(v2.partials[0] == cxld(0.0L));
    CHECK(v2.partials[1] == cxld(1.0L));
    CHECK(v2.partials[2] == cxld(0.0L));
}
