#pragma once

#include <cstdint>
#include <vector>

#include "smf/model.hpp"

namespace smf {

// Relative singular-value threshold sigma_{k+1}/sigma_1 for rank decisions.
inline constexpr double kRankTol = 1e-9;

// Evidence backing a Monte Carlo rank or dimension estimate. `agreement` is
// the two-batch consistency flag; estimates without it are inconclusive.
struct RankEvidence {
    int estimate = 0;
    double gap = 0.0; // sigma_{k+1}/sigma_1 at the accepted estimate
    int samples = 0;
    std::uint64_t seed = 0;
    bool agreement = false;
    double tol = kRankTol;
    std::vector<int> per_trial;
};

// Number of singular values above tol * sigma_max; 0 for the zero matrix.
// Non-finite input is rejected with std::invalid_argument.
int numeric_rank(const MatrixXcd& M, double tol = kRankTol);

// Estimated dimension of span{ r(x) } from two disjoint-seed batches of
// complex Gaussian sample points. Requires batch >= N + 10.
RankEvidence span_dimension(const ColumnModel& cm, std::uint64_t seed, int batch, double tol = kRankTol);

// Largest observed rank of J(r, x) over complex Gaussian trials (>= 5).
RankEvidence generic_jacobian_rank(const ColumnModel& cm, std::uint64_t seed, int trials, double tol = kRankTol);

// Checks that A(z) reaches full column rank R at random parameter draws.
RankEvidence a_full_rank_probe(const FactorModel& model, std::uint64_t seed, int trials, double tol = kRankTol);

} // namespace smf
