#include <doctest.h>

#include "smf/apps.hpp"
#include "smf/model_io.hpp"
#include "smf/solve.hpp"
#include "testutil.hpp"

using namespace smf;

namespace {

FactorModel vandermonde_model(int N) {
    // rows x1^(n-1) through f = exp
    Transform t;
    t.coords = {Transform1d{TransformKind::Exp, 0, 0}};
    FactorModel m;
    m.K = N;
    m.N = N;
    m.R = 2;
    m.l = 1;
    m.domain = Domain::Complex;
    m.columns = ColumnModel::from_template(parse_expression("x1^n/x1"), std::move(t), 1, N);
    return m;
}

} // namespace

TEST_CASE("projection recovers exact members") {
    FactorModel m = rational_model(1, 1, 10).model;
    Prng rng(61);
    VectorXcd zeta = testutil::random_complex_vector(rng, m.l);
    VectorXcd v = eval_b(m.column_model(), zeta);
    ProjectionResult proj = project_onto_range(m.column_model(), v, 611, 5);
    CHECK(!proj.all_starts_diverged);
    CHECK(proj.residual < 1e-10);
    CHECK((eval_b(m.column_model(), proj.zeta) - v).norm() < 1e-9 * v.norm());
}

TEST_CASE("projection reaches scaled sobi columns") {
    FactorModel m = sobi_model(3, 4);
    Prng rng(62);
    VectorXcd zeta = testutil::random_complex_vector(rng, m.l);
    cxd lambda = rng.complex_gaussian();
    VectorXcd v = lambda * eval_b(m.column_model(), zeta);
    ProjectionResult proj = project_onto_range(m.column_model(), v, 622, 8);
    CHECK(proj.residual < 1e-8);
}

TEST_CASE("projection stays far from points outside the range") {
    FactorModel m = vandermonde_model(8);
    Prng rng(63);
    VectorXcd za(1), zb(1);
    za << cxd(0.0, 0.9);
    zb << cxd(0.0, -1.7);
    VectorXcd v = eval_b(m.column_model(), za) + eval_b(m.column_model(), zb);
    VectorXcd noise = testutil::random_complex_vector(rng, 8);
    v += noise / noise.norm();

    // independent oracle: dense grid scan over the generator x = e^zeta
    double grid_min = std::numeric_limits<double>::infinity();
    for (double re = -4.0; re <= 4.0; re += 0.01)
        for (double im = -4.0; im <= 4.0; im += 0.01) {
            cxd x(re, im);
            cxd p(1.0, 0.0);
            double d2 = 0.0;
            for (int n = 0; n < 8; ++n) {
                d2 += std::norm(v(n) - p);
                p *= x;
            }
            grid_min = std::min(grid_min, std::sqrt(d2));
        }
    double grid_rel = grid_min / v.norm();
    CHECK(grid_rel > 0.05);

    ProjectionResult proj = project_onto_range(m.column_model(), v, 633, 20);
    CHECK(proj.residual > 0.04);
    CHECK(proj.residual < 2.0 * grid_rel + 0.05); // the optimizer should not beat the oracle by much
}

TEST_CASE("projection preconditions") {
    FactorModel m = rational_model(1, 1, 10).model;
    VectorXcd v = VectorXcd::Ones(10);
    CHECK_THROWS_AS(project_onto_range(m.column_model(), v, 1, 0), std::invalid_argument);
    v(0) = cxd(std::numeric_limits<double>::quiet_NaN(), 0.0);
    CHECK_THROWS_AS(project_onto_range(m.column_model(), v, 1, 3), std::invalid_argument);
}

TEST_CASE("lm objective never increases across accepted steps") {
    FactorModel m = rational_model(1, 1, 12).model;
    Prng rng(64);
    VectorXcd zeta = testutil::random_complex_vector(rng, m.l);
    VectorXcd v = eval_b(m.column_model(), zeta) + 0.05 * testutil::random_complex_vector(rng, 12);

    const ColumnModel& cm = m.column_model();
    LmEval eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd* res, Eigen::MatrixXd* jac) {
        VectorXcd z(4);
        for (int j = 0; j < 4; ++j)
            z(j) = cxd(p(2 * j), p(2 * j + 1));
        try {
            VectorXcd diff = eval_b(cm, z) - v;
            res->resize(24);
            res->head(12) = diff.real();
            res->tail(12) = diff.imag();
            if (jac) {
                MatrixXcd jb = jacobian_b(cm, z);
                jac->resize(24, 8);
                for (int j = 0; j < 4; ++j) {
                    jac->col(2 * j).head(12) = jb.col(j).real();
                    jac->col(2 * j).tail(12) = jb.col(j).imag();
                    jac->col(2 * j + 1).head(12) = -jb.col(j).imag();
                    jac->col(2 * j + 1).tail(12) = jb.col(j).real();
                }
            }
            return true;
        } catch (const PoleError&) {
            return false;
        }
    };
    for (int s = 0; s < 5; ++s) {
        Prng start_rng = Prng::derived(65, static_cast<std::uint64_t>(s));
        Eigen::VectorXd p0(8);
        for (int j = 0; j < 8; ++j)
            p0(j) = start_rng.gaussian();
        LmResult lm = lm_minimize(eval, p0);
        REQUIRE(lm.feasible);
        for (size_t k = 1; k < lm.objective_history.size(); ++k)
            CHECK(lm.objective_history[k] < lm.objective_history[k - 1]);
    }
}

TEST_CASE("varpro recovers a planted decomposition from the truth") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    Decomposition truth = make_ground_truth(m, 71);
    MatrixXcd y = truth.reconstruct(m.column_model());

    VarproResult fit = varpro_fit(y, m, 711, 1, {}, 1e-9, std::optional<std::vector<VectorXcd>>(truth.zetas));
    CHECK(!fit.all_starts_diverged);
    CHECK(fit.best.residual < 1e-10);
    auto match = match_decompositions(truth, fit.best, m.column_model());
    REQUIRE(match.has_value());
    CHECK(match->discrepancy < 1e-8);
}

TEST_CASE("varpro multistart fits a random rational instance") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    Decomposition truth = make_ground_truth(m, 72);
    MatrixXcd y = truth.reconstruct(m.column_model());
    VarproResult fit = varpro_fit(y, m, 722, 20);
    CHECK(fit.best.residual < 1e-8);
    CHECK(fit.converged_starts >= 1);
}

TEST_CASE("varpro enforces the overdetermined regime") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    m.R = 6; // R > K
    MatrixXcd y = MatrixXcd::Zero(5, 12);
    CHECK_THROWS_AS(varpro_fit(y, m, 1, 1), std::invalid_argument);
}

TEST_CASE("varpro residual equals a from-scratch recomputation") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    Decomposition truth = make_ground_truth(m, 73);
    MatrixXcd y = truth.reconstruct(m.column_model());
    Prng rng(730);
    MatrixXcd noise(5, 12);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 12; ++j)
            noise(i, j) = rng.complex_gaussian();
    y += 0.01 * y.norm() / noise.norm() * noise; // make the residual nonzero
    VarproResult fit = varpro_fit(y, m, 733, 6);
    REQUIRE(!fit.all_starts_diverged);

    MatrixXcd b = fit.best.assemble_b(m.column_model());
    Eigen::JacobiSVD<MatrixXcd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-9);
    MatrixXcd a = svd.solve(y.transpose()).transpose();
    double recomputed = (y - a * b.transpose()).norm() / y.norm();
    CHECK(std::abs(recomputed - fit.best.residual) < 1e-12);
}

TEST_CASE("match accepts the trivial indeterminacy and nothing else") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    Decomposition d1 = make_ground_truth(m, 74);

    SUBCASE("identity") {
        auto match = match_decompositions(d1, d1, m.column_model());
        REQUIRE(match.has_value());
        CHECK(match->permutation == std::vector<int>{0, 1});
        CHECK(match->discrepancy < 1e-14);
        for (const cxd& s : match->scales)
            CHECK(std::abs(s - cxd(1, 0)) < 1e-12);
    }

    SUBCASE("swap and rescale") {
        Decomposition d2 = d1;
        std::swap(d2.zetas[0], d2.zetas[1]);
        MatrixXcd a(5, 2);
        a.col(0) = d2.A.col(1);
        a.col(1) = d2.A.col(0);
        const cxd c(2.0, -1.0);
        // reciprocal scaling within term 0: the rational rows are linear in
        // the numerator parameters, so dividing x1, x2 by c divides b by c.
        a.col(0) *= c;
        d2.zetas[0](0) /= c;
        d2.zetas[0](1) /= c;
        d2.A = a;
        auto match = match_decompositions(d1, d2, m.column_model());
        REQUIRE(match.has_value());
        CHECK(match->permutation == std::vector<int>{1, 0});
        CHECK(match->discrepancy < 1e-12);
    }

    SUBCASE("perturbation breaks the match") {
        Decomposition d2 = d1;
        d2.zetas[1](2) += 0.3;
        CHECK(!match_decompositions(d1, d2, m.column_model()).has_value());
    }

    SUBCASE("symmetry") {
        Decomposition d2 = d1;
        d2.zetas[0](0) += 1e-9; // tiny perturbation keeps the match
        auto ab = match_decompositions(d1, d2, m.column_model());
        auto ba = match_decompositions(d2, d1, m.column_model());
        REQUIRE(ab.has_value());
        REQUIRE(ba.has_value());
        CHECK(std::abs(ab->discrepancy - ba->discrepancy) < 1e-12);
    }
}

TEST_CASE("empirical uniqueness on the rational family") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    EmpiricalReport rep = empirical_uniqueness_test(m, 75, 12);
    CHECK(rep.verdict == Verdict::Pass);
    CHECK(rep.converged >= 3);
    CHECK(rep.matched == rep.converged);
}

TEST_CASE("empirical uniqueness on the exponential family") {
    FactorModel m = exp_poly_model(1, {0}, 8, 4, 3).model;
    EmpiricalReport rep = empirical_uniqueness_test(m, 76, 12);
    CHECK(rep.verdict == Verdict::Pass);
    CHECK(rep.converged >= 3);
    CHECK(rep.matched == rep.converged);
}

TEST_CASE("duplicated ground truth is flagged degenerate") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    Decomposition truth = make_ground_truth(m, 77);
    truth.zetas[1] = truth.zetas[0];
    EmpiricalReport rep = empirical_uniqueness_run(m, truth, 77, 10);
    CHECK(rep.degenerate);
    CHECK(rep.verdict == Verdict::Inconclusive);
}

TEST_CASE("too few restarts is inconclusive") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    EmpiricalReport rep = empirical_uniqueness_test(m, 78, 1);
    CHECK(rep.verdict == Verdict::Inconclusive);
}

TEST_CASE("empirical runs are deterministic given the seed") {
    FactorModel m = rational_model(1, 1, 12, 5, 2).model;
    EmpiricalReport a = empirical_uniqueness_test(m, 79, 10);
    EmpiricalReport b = empirical_uniqueness_test(m, 79, 10);
    CHECK(a.residuals == b.residuals);
    CHECK(a.converged == b.converged);
    CHECK(a.matched == b.matched);
}
