#include "smf/numrank.hpp"

#include <Eigen/SVD>

#include "smf/rng.hpp"

namespace smf {

namespace {

VectorXcd gaussian_vector(Prng& rng, int n, bool complex_domain) {
    VectorXcd v(n);
    for (int j = 0; j < n; ++j)
        v(j) = complex_domain ? rng.complex_gaussian() : cxd(rng.gaussian(), 0.0);
    return v;
}

// Draws a pole-free sample of r(x) at a complex Gaussian point. Counts
// attempts so a pole-riddled model surfaces as SamplingExhausted instead of
// spinning forever.
VectorXcd sample_r(const ColumnModel& cm, Prng& rng, int& attempts, int max_attempts) {
    while (attempts < max_attempts) {
        ++attempts;
        VectorXcd x = gaussian_vector(rng, cm.vars(), true);
        try {
            VectorXcd r = eval_r(cm, x);
            if (!r.allFinite())
                continue;
            return r;
        } catch (const PoleError&) {
            continue;
        }
    }
    throw SamplingExhausted("span_dimension: more than 90% of draws hit the pole guard");
}

// Unit-scaling the columns leaves the rank unchanged (diagonal nonsingular
// right factor) and removes the huge dynamic range of high-power rows.
void normalize_columns(MatrixXcd& m) {
    for (int c = 0; c < m.cols(); ++c) {
        double norm = m.col(c).norm();
        if (norm > 0.0)
            m.col(c) /= norm;
    }
}

int rank_of_batch(const ColumnModel& cm, std::uint64_t seed, int batch, double tol, double* gap_out) {
    Prng rng(seed);
    const int max_attempts = 10 * batch;
    int attempts = 0;
    MatrixXcd samples(cm.rows(), batch);
    for (int t = 0; t < batch; ++t)
        samples.col(t) = sample_r(cm, rng, attempts, max_attempts);
    normalize_columns(samples);
    Eigen::JacobiSVD<MatrixXcd> svd(samples);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv(0) : 0.0;
    int rank = 0;
    if (smax > 0.0)
        for (int k = 0; k < sv.size(); ++k)
            if (sv(k) > tol * smax)
                ++rank;
    if (gap_out)
        *gap_out = (smax > 0.0 && rank < sv.size()) ? sv(rank) / smax : 0.0;
    return rank;
}

} // namespace

int numeric_rank(const MatrixXcd& M, double tol) {
    if (!M.allFinite())
        throw std::invalid_argument("numeric_rank: matrix has non-finite entries");
    if (!(tol > 0.0 && tol < 1.0))
        throw std::invalid_argument("numeric_rank: tol must lie in (0,1)");
    if (M.size() == 0)
        return 0;
    Eigen::JacobiSVD<MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    double smax = sv(0);
    if (smax == 0.0)
        return 0;
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
        if (sv(k) > tol * smax)
            ++rank;
    return rank;
}

RankEvidence span_dimension(const ColumnModel& cm, std::uint64_t seed, int batch, double tol) {
    if (batch < cm.rows() + 10)
        throw std::invalid_argument("span_dimension: batch must be >= N + 10");
    double gap0 = 0.0, gap1 = 0.0;
    int r0 = rank_of_batch(cm, mix_seed(seed, 0), batch, tol, &gap0);
    int r1 = rank_of_batch(cm, mix_seed(seed, 0) + (1ULL << 32), batch, tol, &gap1);
    RankEvidence ev;
    ev.estimate = std::max(r0, r1);
    ev.gap = r0 >= r1 ? gap0 : gap1;
    ev.samples = 2 * batch;
    ev.seed = seed;
    ev.tol = tol;
    ev.agreement = (r0 == r1);
    ev.per_trial = {r0, r1};
    return ev;
}

RankEvidence generic_jacobian_rank(const ColumnModel& cm, std::uint64_t seed, int trials, double tol) {
    if (trials < 5)
        throw std::invalid_argument("generic_jacobian_rank: trials must be >= 5");
    RankEvidence ev;
    ev.seed = seed;
    ev.samples = trials;
    ev.tol = tol;
    double best_gap = 0.0;
    int best = 0;
    for (int t = 0; t < trials; ++t) {
        Prng rng = Prng::derived(seed, 1000 + static_cast<std::uint64_t>(t));
        int rank = -1;
        for (int attempt = 0; attempt < 10 && rank < 0; ++attempt) {
            VectorXcd x = gaussian_vector(rng, cm.vars(), true);
            try {
                MatrixXcd jac = jacobian_r(cm, x);
                if (!jac.allFinite())
                    continue;
                normalize_columns(jac);
                Eigen::JacobiSVD<MatrixXcd> svd(jac);
                const auto& sv = svd.singularValues();
                double smax = sv.size() > 0 ? sv(0) : 0.0;
                rank = 0;
                if (smax > 0.0)
                    for (int k = 0; k < sv.size(); ++k)
                        if (sv(k) > tol * smax)
                            ++rank;
                if (rank > best || (rank == best && best_gap == 0.0)) {
                    best = rank;
                    best_gap = (smax > 0.0 && rank < sv.size()) ? sv(rank) / smax : 0.0;
                }
            } catch (const PoleError&) {
                rank = -1;
            }
        }
        if (rank < 0)
            throw SamplingExhausted("generic_jacobian_rank: repeated pole hits");
        ev.per_trial.push_back(rank);
    }
    ev.estimate = best;
    ev.gap = best_gap;
    // Two-batch agreement: the first and second half of the trials must see
    // the same maximum.
    int half = trials / 2;
    int m0 = 0, m1 = 0;
    for (int t = 0; t < trials; ++t)
        (t < half ? m0 : m1) = std::max(t < half ? m0 : m1, ev.per_trial[static_cast<size_t>(t)]);
    ev.agreement = (m0 == m1);
    return ev;
}

RankEvidence a_full_rank_probe(const FactorModel& model, std::uint64_t seed, int trials, double tol) {
    if (trials < 3)
        throw std::invalid_argument("a_full_rank_probe: trials must be >= 3");
    RankEvidence ev;
    ev.seed = seed;
    ev.samples = trials;
    ev.tol = tol;
    const bool complex_domain = model.domain == Domain::Complex;
    int best = 0;
    for (int t = 0; t < trials; ++t) {
        Prng rng = Prng::derived(seed, 2000 + static_cast<std::uint64_t>(t));
        MatrixXcd a;
        if (std::holds_alternative<GenericDenseA>(model.a_spec)) {
            a.resize(model.K, model.R);
            for (int i = 0; i < model.K; ++i)
                for (int j = 0; j < model.R; ++j)
                    a(i, j) = complex_domain ? rng.complex_gaussian() : cxd(rng.gaussian(), 0.0);
        } else {
            const auto& ea = std::get<ExpressionA>(model.a_spec);
            a = eval_expression_a(ea, model.K, model.R, gaussian_vector(rng, ea.param_count, complex_domain));
            if (!a.allFinite()) {
                ev.per_trial.push_back(-1);
                continue;
            }
        }
        int rank = numeric_rank(a, tol);
        ev.per_trial.push_back(rank);
        best = std::max(best, rank);
    }
    ev.estimate = best;
    int full_hits = 0;
    for (int r : ev.per_trial)
        if (r == best)
            ++full_hits;
    ev.agreement = full_hits >= 2;
    return ev;
}

} // namespace smf
