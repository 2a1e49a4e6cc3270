#pragma once

#include <cstdint>
#include <vector>

#include "smf/model.hpp"
#include "smf/trig.hpp"

namespace smf {

// ---------------------------------------------------------------------------
// Joint diagonalization of lagged covariance matrices
// ---------------------------------------------------------------------------

// Mixing matrix M (I x R) and lag coefficients D (P x R, row p = diag of the
// p-th source covariance). tau1_zero pins the first lag's coefficients real.
struct SobiInstance {
    int I = 0;
    int P = 0;
    int R = 0;
    MatrixXcd M;
    MatrixXcd D;
    bool tau1_zero = false;

    static SobiInstance random(int I, int P, int R, std::uint64_t seed, bool tau1_zero = false);
};

// C_p = M diag(D_p) M^H, exact products.
std::vector<MatrixXcd> sobi_build(const SobiInstance& inst);

// Stacks vec((C_p + C_p^H)/2)^T over p, then vec((C_p - C_p^H)/2i)^T,
// giving the 2P x I^2 matrix Y of the factorization Y = A B^T.
MatrixXcd sobi_reformulate(const std::vector<MatrixXcd>& c_list);

// Companion factors for validation: A = [(D+D*)/2; (D-D*)/2i] and
// B with columns conj(m_r) (x) m_r.
MatrixXcd sobi_factor_a(const SobiInstance& inst);
MatrixXcd sobi_factor_b(const SobiInstance& inst);

// Column model with rows (x_p - i x_{I+p})(x_q + i x_{I+q}): N = I^2, l = 2I,
// K = 2P, generic dense real A, scaling-invariant. R defaults to (I-1)^2.
FactorModel sobi_model(int I, int P, int R = -1);

// min(2P, (I-1)^2), or min(2P-1, (I-1)^2) when the first lag is zero.
int sobi_bound(int I, int P, bool tau1_zero);

struct SobiTableRow {
    int I;
    int thm2;     // (I-1)^2, assuming R <= P
    int sobium;   // largest R with R(R-1) <= I^2 (I-1)^2 / 2
    int alg_geom; // (I^2 - I)/2
};

// The three bound families tabulated for I = 3..9.
std::vector<SobiTableRow> sobi_table();

// ---------------------------------------------------------------------------
// Parametric source families
// ---------------------------------------------------------------------------

struct ModelWithBound {
    FactorModel model;
    int bound;
};

// Sources sum_f (p_0f + p_1f n + ... + p_{d_f f} n^{d_f}) a_f^n sampled at
// n = 1..N; bound N - (d_1 + ... + d_F + 2F). K and R default to the bound.
ModelWithBound exp_poly_model(int F, const std::vector<int>& degrees, int N, int K = -1, int R = -1);

// Sources (a_0 + ... + a_p n^p)/(b_0 + ... + b_q n^q) sampled at n = 1..N;
// requires q >= 1; bound N - (p+q+1). K defaults to N, R to the bound.
ModelWithBound rational_model(int p, int q, int N, int K = -1, int R = -1);

// The six-parameter mixed family a^n/n + ((b+n)/(c+n)) cos(alpha n + phi)
// + cos(beta n), rationalized through half-angle and multiple-angle
// identities; bound N - 6. K defaults to N, R to the bound.
ModelWithBound example_model(int N, int K = -1, int R = -1);

} // namespace smf
