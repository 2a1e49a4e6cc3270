#include "smf/solve.hpp"

#include <algorithm>
#include <numeric>

#include <Eigen/SVD>

#include "smf/rng.hpp"

namespace smf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Levenberg-Marquardt driver
// ---------------------------------------------------------------------------

LmResult lm_minimize(const LmEval& eval, const VectorXd& p0, const LmOptions& opts) {
    LmResult out;
    out.params = p0;

    VectorXd res;
    MatrixXd jac;
    if (!eval(p0, &res, &jac))
        return out; // infeasible initial point

    out.feasible = true;
    double obj = res.norm();
    out.objective = obj;
    out.objective_history.push_back(obj);

    const int npar = static_cast<int>(p0.size());
    MatrixXd jtj = jac.transpose() * jac;
    double mu = opts.mu_init_scale * jtj.trace() / std::max(1, npar);
    if (!(mu > 0.0))
        mu = opts.mu_init_scale;

    VectorXd p = p0;
    int rejects = 0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        out.iterations = it + 1;
        VectorXd grad = jac.transpose() * res;
        if (grad.lpNorm<Eigen::Infinity>() < opts.gradient_tol) {
            out.converged = true;
            break;
        }
        MatrixXd damped = jtj;
        damped.diagonal().array() += mu;
        VectorXd step = damped.ldlt().solve(-grad);
        VectorXd p_try = p + step;
        VectorXd res_try;
        bool ok = eval(p_try, &res_try, nullptr);
        if (ok && res_try.norm() < obj) {
            p = p_try;
            if (!eval(p, &res, &jac))
                break; // should not happen at an accepted point
            obj = res.norm();
            jtj = jac.transpose() * jac;
            mu *= opts.mu_shrink;
            rejects = 0;
            out.objective_history.push_back(obj);
            out.params = p;
            out.objective = obj;
        } else {
            mu *= opts.mu_grow;
            if (++rejects > opts.max_consecutive_rejects)
                break;
        }
    }
    out.params = p;
    out.objective = obj;
    return out;
}

// ---------------------------------------------------------------------------
// Real <-> complex parameter packing
// ---------------------------------------------------------------------------

namespace {

VectorXd pack_zetas(const std::vector<VectorXcd>& zetas, bool complex_mode) {
    int l = zetas.empty() ? 0 : static_cast<int>(zetas.front().size());
    int per = complex_mode ? 2 * l : l;
    VectorXd p(static_cast<int>(zetas.size()) * per);
    for (size_t r = 0; r < zetas.size(); ++r)
        for (int j = 0; j < l; ++j) {
            if (complex_mode) {
                p(static_cast<int>(r) * per + 2 * j) = zetas[r](j).real();
                p(static_cast<int>(r) * per + 2 * j + 1) = zetas[r](j).imag();
            } else {
                p(static_cast<int>(r) * per + j) = zetas[r](j).real();
            }
        }
    return p;
}

std::vector<VectorXcd> unpack_zetas(const VectorXd& p, int R, int l, bool complex_mode) {
    int per = complex_mode ? 2 * l : l;
    std::vector<VectorXcd> zetas(static_cast<size_t>(R), VectorXcd(l));
    for (int r = 0; r < R; ++r)
        for (int j = 0; j < l; ++j) {
            if (complex_mode)
                zetas[static_cast<size_t>(r)](j) = cxd(p(r * per + 2 * j), p(r * per + 2 * j + 1));
            else
                zetas[static_cast<size_t>(r)](j) = cxd(p(r * per + j), 0.0);
        }
    return zetas;
}

// Writes the real-stacked column pair for d/dRe and d/dIm of a complex
// directional derivative column.
void write_complex_columns(MatrixXd& jac, int col, const VectorXcd& dcol, bool complex_mode, int nres) {
    for (int i = 0; i < nres; ++i) {
        jac(i, col) = dcol(i).real();
        jac(nres + i, col) = dcol(i).imag();
    }
    if (complex_mode) {
        for (int i = 0; i < nres; ++i) {
            jac(i, col + 1) = -dcol(i).imag();
            jac(nres + i, col + 1) = dcol(i).real();
        }
    }
}

VectorXcd random_zeta(Prng& rng, int l, bool complex_mode) {
    VectorXcd z(l);
    for (int j = 0; j < l; ++j)
        z(j) = complex_mode ? rng.complex_gaussian() : cxd(rng.gaussian(), 0.0);
    return z;
}

} // namespace

// ---------------------------------------------------------------------------
// Projection onto Range(b)
// ---------------------------------------------------------------------------

ProjectionResult project_onto_range(const ColumnModel& cm, const VectorXcd& v, std::uint64_t seed, int starts,
                                    const LmOptions& opts) {
    if (starts < 1)
        throw std::invalid_argument("project_onto_range: starts must be >= 1");
    if (!v.allFinite())
        throw std::invalid_argument("project_onto_range: target vector has non-finite entries");
    const int l = cm.vars();
    const int N = cm.rows();
    const double vnorm = std::max(v.norm(), 1e-300);

    LmEval eval = [&](const VectorXd& p, VectorXd* res, MatrixXd* jac) {
        VectorXcd zeta = unpack_zetas(p, 1, l, true).front();
        try {
            VectorXcd diff = eval_b(cm, zeta) - v;
            if (!diff.allFinite())
                return false;
            res->resize(2 * N);
            res->head(N) = diff.real();
            res->tail(N) = diff.imag();
            if (jac) {
                MatrixXcd jb = jacobian_b(cm, zeta);
                jac->resize(2 * N, 2 * l);
                for (int j = 0; j < l; ++j)
                    write_complex_columns(*jac, 2 * j, jb.col(j), true, N);
            }
            return true;
        } catch (const PoleError&) {
            return false;
        } catch (const TransformSingular&) {
            return false;
        }
    };

    ProjectionResult out;
    for (int s = 0; s < starts; ++s) {
        Prng rng = Prng::derived(seed, 3000 + static_cast<std::uint64_t>(s));
        VectorXcd z0 = random_zeta(rng, l, true);
        LmResult lm = lm_minimize(eval, pack_zetas({z0}, true), opts);
        if (!lm.feasible)
            continue;
        double rel = lm.objective / vnorm;
        if (out.all_starts_diverged || rel < out.residual) {
            out.residual = rel;
            out.zeta = unpack_zetas(lm.params, 1, l, true).front();
            out.best_start = s;
        }
        out.all_starts_diverged = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Variable projection fit
// ---------------------------------------------------------------------------

MatrixXcd Decomposition::assemble_b(const ColumnModel& cm) const {
    MatrixXcd b(cm.rows(), static_cast<int>(zetas.size()));
    for (size_t r = 0; r < zetas.size(); ++r)
        b.col(static_cast<int>(r)) = eval_b(cm, zetas[r]);
    return b;
}

MatrixXcd Decomposition::reconstruct(const ColumnModel& cm) const {
    return A * assemble_b(cm).transpose();
}

namespace {

struct VarproEval {
    const MatrixXcd& Y;
    const ColumnModel& cm;
    int R;
    bool complex_mode;
    double rank_tol;

    // Outputs refreshed on every feasible call.
    mutable MatrixXcd B;
    mutable MatrixXcd A;
    mutable bool rank_deficient = false;

    bool operator()(const VectorXd& p, VectorXd* res, MatrixXd* jac) const {
        const int l = cm.vars();
        const int N = cm.rows();
        const int K = static_cast<int>(Y.rows());
        std::vector<VectorXcd> zetas = unpack_zetas(p, R, l, complex_mode);
        B.resize(N, R);
        std::vector<MatrixXcd> jb;
        try {
            for (int r = 0; r < R; ++r) {
                B.col(r) = eval_b(cm, zetas[static_cast<size_t>(r)]);
                if (jac)
                    jb.push_back(jacobian_b(cm, zetas[static_cast<size_t>(r)]));
            }
        } catch (const PoleError&) {
            return false;
        } catch (const TransformSingular&) {
            return false;
        }
        if (!B.allFinite())
            return false;

        Eigen::JacobiSVD<MatrixXcd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(rank_tol);
        A = svd.solve(Y.transpose()).transpose(); // A^T = argmin ||B X - Y^T||
        rank_deficient = svd.rank() < R;

        MatrixXcd E = Y - A * B.transpose();
        const int m = K * N;
        res->resize(2 * m);
        for (int c = 0; c < N; ++c)
            for (int i = 0; i < K; ++i) {
                res->operator()(c * K + i) = E(i, c).real();
                res->operator()(m + c * K + i) = E(i, c).imag();
            }

        if (jac) {
            const int per = complex_mode ? 2 * l : l;
            jac->resize(2 * m, R * per);
            VectorXcd dcol(m);
            for (int r = 0; r < R; ++r)
                for (int j = 0; j < l; ++j) {
                    // d vec(E) / d zeta_{r,j} with A held fixed:
                    // -a_r * (d b / d zeta_j)^T, vectorized column-major.
                    for (int c = 0; c < N; ++c)
                        for (int i = 0; i < K; ++i)
                            dcol(c * K + i) = -A(i, r) * jb[static_cast<size_t>(r)](c, j);
                    write_complex_columns(*jac, r * per + (complex_mode ? 2 * j : j), dcol, complex_mode, m);
                }
        }
        return true;
    }
};

} // namespace

VarproResult varpro_fit(const MatrixXcd& Y, const FactorModel& model, std::uint64_t seed, int starts,
                        const LmOptions& opts, double rank_tol, const std::optional<std::vector<VectorXcd>>& init) {
    model.validate();
    if (model.K < model.R)
        throw std::invalid_argument("varpro_fit: requires the overdetermined regime K >= R");
    if (Y.rows() != model.K || Y.cols() != model.N)
        throw std::invalid_argument("varpro_fit: Y has wrong dimensions");
    if (starts < 1)
        throw std::invalid_argument("varpro_fit: starts must be >= 1");

    const ColumnModel& cm = model.column_model();
    const bool complex_mode = model.domain == Domain::Complex;
    const int R = model.R;
    const int l = model.l;
    const double ynorm = std::max(Y.norm(), 1e-300);

    VarproResult out;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int s = 0; s < starts; ++s) {
        std::vector<VectorXcd> z0;
        if (s == 0 && init) {
            z0 = *init;
        } else {
            Prng rng = Prng::derived(seed, 4000 + static_cast<std::uint64_t>(s));
            for (int r = 0; r < R; ++r)
                z0.push_back(random_zeta(rng, l, complex_mode));
        }
        VarproEval ev{Y, cm, R, complex_mode, rank_tol, {}, {}, false};
        LmEval eval = [&ev](const VectorXd& p, VectorXd* res, MatrixXd* jac) { return ev(p, res, jac); };
        LmResult lm = lm_minimize(eval, pack_zetas(z0, complex_mode), opts);
        if (!lm.feasible)
            continue;
        out.all_starts_diverged = false;
        // Re-evaluate at the final point so B/A/rank flags describe it.
        VectorXd res;
        if (!ev(lm.params, &res, nullptr))
            continue;
        double rel = res.norm() / ynorm;
        if (rel < kAcceptTol)
            ++out.converged_starts;
        if (rel < best_obj) {
            best_obj = rel;
            out.best.A = ev.A;
            out.best.zetas = unpack_zetas(lm.params, R, l, complex_mode);
            out.best.residual = rel;
            out.rank_deficient_b = ev.rank_deficient;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Decomposition matching
// ---------------------------------------------------------------------------

std::optional<MatchResult> match_decompositions(const Decomposition& d1, const Decomposition& d2,
                                                const ColumnModel& cm, double tol) {
    const int R = static_cast<int>(d1.zetas.size());
    if (static_cast<int>(d2.zetas.size()) != R || d1.A.rows() != d2.A.rows())
        throw std::invalid_argument("match_decompositions: dimension mismatch");

    MatrixXcd b1 = d1.assemble_b(cm);
    MatrixXcd b2 = d2.assemble_b(cm);

    // cost(r,s) = ||T2_s - T1_r|| / ||T1_r|| over the rank-1 terms.
    MatrixXd cost(R, R);
    std::vector<MatrixXcd> t1(static_cast<size_t>(R)), t2(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r) {
        t1[static_cast<size_t>(r)] = d1.A.col(r) * b1.col(r).transpose();
        t2[static_cast<size_t>(r)] = d2.A.col(r) * b2.col(r).transpose();
    }
    for (int r = 0; r < R; ++r) {
        double denom = std::max(t1[static_cast<size_t>(r)].norm(), 1e-300);
        for (int s = 0; s < R; ++s)
            cost(r, s) = (t2[static_cast<size_t>(s)] - t1[static_cast<size_t>(r)]).norm() / denom;
    }

    // Greedy assignment by globally smallest cost, then exact search when the
    // greedy max exceeds tol and R is small enough to enumerate.
    std::vector<int> perm(static_cast<size_t>(R), -1);
    {
        std::vector<bool> used_r(static_cast<size_t>(R), false), used_s(static_cast<size_t>(R), false);
        for (int pick = 0; pick < R; ++pick) {
            double best = std::numeric_limits<double>::infinity();
            int br = -1, bs = -1;
            for (int r = 0; r < R; ++r)
                for (int s = 0; s < R; ++s)
                    if (!used_r[static_cast<size_t>(r)] && !used_s[static_cast<size_t>(s)] && cost(r, s) < best) {
                        best = cost(r, s);
                        br = r;
                        bs = s;
                    }
            used_r[static_cast<size_t>(br)] = true;
            used_s[static_cast<size_t>(bs)] = true;
            perm[static_cast<size_t>(br)] = bs;
        }
    }
    auto max_cost = [&](const std::vector<int>& p) {
        double m = 0.0;
        for (int r = 0; r < R; ++r)
            m = std::max(m, cost(r, p[static_cast<size_t>(r)]));
        return m;
    };
    double disc = max_cost(perm);
    if (disc >= tol && R <= 9) {
        std::vector<int> idx(static_cast<size_t>(R));
        std::iota(idx.begin(), idx.end(), 0);
        do {
            double m = max_cost(idx);
            if (m < disc) {
                disc = m;
                perm = idx;
            }
        } while (std::next_permutation(idx.begin(), idx.end()));
    }
    if (disc >= tol)
        return std::nullopt;

    MatchResult out;
    out.permutation = perm;
    out.discrepancy = disc;
    out.scales.resize(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r) {
        const auto& a1 = d1.A.col(r);
        const auto& a2 = d2.A.col(perm[static_cast<size_t>(r)]);
        out.scales[static_cast<size_t>(r)] = (a1.adjoint() * a2)(0, 0) / std::max(a1.squaredNorm(), 1e-300);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Empirical uniqueness
// ---------------------------------------------------------------------------

Decomposition make_ground_truth(const FactorModel& model, std::uint64_t seed) {
    model.validate();
    const bool complex_mode = model.domain == Domain::Complex;
    const ColumnModel& cm = model.column_model();
    Prng rng = Prng::derived(seed, 5000);
    Decomposition truth;
    truth.A.resize(model.K, model.R);
    for (int i = 0; i < model.K; ++i)
        for (int j = 0; j < model.R; ++j)
            truth.A(i, j) = complex_mode ? rng.complex_gaussian() : cxd(rng.gaussian(), 0.0);
    for (int r = 0; r < model.R; ++r) {
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 100)
                throw SamplingExhausted("make_ground_truth: repeated pole hits");
            VectorXcd z = random_zeta(rng, model.l, complex_mode);
            try {
                (void)eval_b(cm, z);
                truth.zetas.push_back(z);
                break;
            } catch (const PoleError&) {
            } catch (const TransformSingular&) {
            }
        }
    }
    truth.residual = 0.0;
    return truth;
}

EmpiricalReport empirical_uniqueness_run(const FactorModel& model, const Decomposition& truth, std::uint64_t seed,
                                         int restarts, double accept_tol, double match_tol) {
    EmpiricalReport rep;
    rep.seed = seed;
    rep.restarts = restarts;
    rep.truth = truth;
    if (restarts < 10) {
        rep.verdict = Verdict::Inconclusive;
        rep.reason = "restarts below the minimum of 10";
        return rep;
    }

    const ColumnModel& cm = model.column_model();
    MatrixXcd bt = truth.assemble_b(cm);
    MatrixXcd Y = truth.A * bt.transpose();

    // A rank-deficient ground-truth B is a non-generic instance; it cannot
    // support a uniqueness verdict either way.
    {
        Eigen::JacobiSVD<MatrixXcd> svd(bt);
        const auto& sv = svd.singularValues();
        int rank = 0;
        if (sv.size() > 0 && sv(0) > 0.0)
            for (int k = 0; k < sv.size(); ++k)
                if (sv(k) > 1e-9 * sv(0))
                    ++rank;
        rep.degenerate = rank < model.R;
    }

    for (int s = 0; s < restarts; ++s) {
        VarproResult fit = varpro_fit(Y, model, mix_seed(seed, 6000 + static_cast<std::uint64_t>(s)), 1);
        double rel = fit.all_starts_diverged ? std::numeric_limits<double>::infinity() : fit.best.residual;
        rep.residuals.push_back(rel);
        if (fit.all_starts_diverged || rel >= accept_tol)
            continue;
        if (fit.rank_deficient_b)
            continue; // rank-deficient B voids the fit
        ++rep.converged;
        if (match_decompositions(truth, fit.best, cm, match_tol))
            ++rep.matched;
    }

    if (rep.degenerate) {
        rep.verdict = Verdict::Inconclusive;
        rep.reason = "degenerate instance: structured factor is rank deficient";
    } else if (rep.converged < 3) {
        rep.verdict = Verdict::Inconclusive;
        rep.reason = "fewer than 3 fits converged";
    } else if (rep.matched == rep.converged) {
        rep.verdict = Verdict::Pass;
        rep.reason = "all converged fits match the ground truth";
    } else {
        rep.verdict = Verdict::Fail;
        rep.reason = "a converged fit does not match the ground truth";
    }
    return rep;
}

EmpiricalReport empirical_uniqueness_test(const FactorModel& model, std::uint64_t seed, int restarts,
                                          double accept_tol, double match_tol) {
    model.validate();
    if (restarts < 10) {
        EmpiricalReport rep;
        rep.seed = seed;
        rep.restarts = restarts;
        rep.verdict = Verdict::Inconclusive;
        rep.reason = "restarts below the minimum of 10";
        return rep;
    }
    Decomposition truth = make_ground_truth(model, seed);
    return empirical_uniqueness_run(model, truth, seed, restarts, accept_tol, match_tol);
}

} // namespace smf
