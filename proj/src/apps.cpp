#include "smf/apps.hpp"

#include <numeric>

#include "smf/rng.hpp"

namespace smf {

SobiInstance SobiInstance::random(int I, int P, int R, std::uint64_t seed, bool tau1_zero) {
    if (I < 1 || P < 1 || R < 1)
        throw std::invalid_argument("SobiInstance: I, P, R must be >= 1");
    SobiInstance inst;
    inst.I = I;
    inst.P = P;
    inst.R = R;
    inst.tau1_zero = tau1_zero;
    Prng rng = Prng::derived(seed, 9000);
    inst.M.resize(I, R);
    for (int i = 0; i < I; ++i)
        for (int r = 0; r < R; ++r)
            inst.M(i, r) = rng.complex_gaussian();
    inst.D.resize(P, R);
    for (int p = 0; p < P; ++p)
        for (int r = 0; r < R; ++r) {
            cxd d = rng.complex_gaussian();
            inst.D(p, r) = (tau1_zero && p == 0) ? cxd(d.real(), 0.0) : d;
        }
    return inst;
}

std::vector<MatrixXcd> sobi_build(const SobiInstance& inst) {
    if (inst.M.rows() != inst.I || inst.M.cols() != inst.R || inst.D.rows() != inst.P || inst.D.cols() != inst.R)
        throw std::invalid_argument("sobi_build: inconsistent dimensions");
    std::vector<MatrixXcd> c;
    c.reserve(static_cast<size_t>(inst.P));
    for (int p = 0; p < inst.P; ++p)
        c.push_back(inst.M * inst.D.row(p).asDiagonal() * inst.M.adjoint());
    return c;
}

MatrixXcd sobi_reformulate(const std::vector<MatrixXcd>& c_list) {
    if (c_list.empty())
        throw std::invalid_argument("sobi_reformulate: empty covariance list");
    const int I = static_cast<int>(c_list.front().rows());
    const int P = static_cast<int>(c_list.size());
    for (const auto& c : c_list)
        if (c.rows() != I || c.cols() != I)
            throw std::invalid_argument("sobi_reformulate: covariance matrices must be square and same size");
    MatrixXcd y(2 * P, I * I);
    const cxd two_i(0.0, 2.0);
    for (int p = 0; p < P; ++p) {
        MatrixXcd herm = (c_list[static_cast<size_t>(p)] + c_list[static_cast<size_t>(p)].adjoint()) / 2.0;
        MatrixXcd skew = (c_list[static_cast<size_t>(p)] - c_list[static_cast<size_t>(p)].adjoint()) / two_i;
        y.row(p) = Eigen::Map<const VectorXcd>(herm.data(), I * I).transpose();
        y.row(P + p) = Eigen::Map<const VectorXcd>(skew.data(), I * I).transpose();
    }
    return y;
}

MatrixXcd sobi_factor_a(const SobiInstance& inst) {
    MatrixXcd a(2 * inst.P, inst.R);
    a.topRows(inst.P) = (inst.D + inst.D.conjugate()) / 2.0;
    a.bottomRows(inst.P) = (inst.D - inst.D.conjugate()) / cxd(0.0, 2.0);
    return a;
}

MatrixXcd sobi_factor_b(const SobiInstance& inst) {
    const int I = inst.I;
    MatrixXcd b(I * I, inst.R);
    for (int r = 0; r < inst.R; ++r)
        for (int k = 0; k < I; ++k)
            for (int j = 0; j < I; ++j)
                b(k * I + j, r) = std::conj(inst.M(k, r)) * inst.M(j, r);
    return b;
}

FactorModel sobi_model(int I, int P, int R) {
    if (I < 2 || P < 1)
        throw std::invalid_argument("sobi_model: requires I >= 2 and P >= 1");
    if (R < 0)
        R = (I - 1) * (I - 1);
    const int l = 2 * I;
    const ScalarExpr imag_unit = ScalarExpr::constant(cxld(0.0L, 1.0L));

    std::vector<ScalarExpr> rows;
    rows.reserve(static_cast<size_t>(I * I));
    for (int k = 1; k <= I; ++k)
        for (int j = 1; j <= I; ++j) {
            // Entry (k-1)I + j of conj(m) (x) m with m = u + iv, u = x_{1..I},
            // v = x_{I+1..2I}.
            ScalarExpr left = ScalarExpr::variable(k) - imag_unit * ScalarExpr::variable(I + k);
            ScalarExpr right = ScalarExpr::variable(j) + imag_unit * ScalarExpr::variable(I + j);
            rows.push_back(left * right);
        }

    FactorModel model;
    model.K = 2 * P;
    model.N = I * I;
    model.R = R;
    model.l = l;
    model.domain = Domain::Real;
    model.scaling = ScalingFlag::DeclaredTrue;
    model.a_spec = GenericDenseA{};
    model.columns = ColumnModel::from_rows(std::move(rows), Transform::identity(l), l);
    model.validate();
    return model;
}

int sobi_bound(int I, int P, bool tau1_zero) {
    if (I < 2 || P < 1)
        throw std::invalid_argument("sobi_bound: requires I >= 2 and P >= 1");
    int lag_bound = tau1_zero ? 2 * P - 1 : 2 * P;
    return std::min(lag_bound, (I - 1) * (I - 1));
}

std::vector<SobiTableRow> sobi_table() {
    std::vector<SobiTableRow> rows;
    for (int I = 3; I <= 9; ++I) {
        SobiTableRow row;
        row.I = I;
        row.thm2 = (I - 1) * (I - 1);
        long long cap = static_cast<long long>(I) * I * (I - 1) * (I - 1) / 2;
        int r = 1;
        while (static_cast<long long>(r + 1) * r <= cap)
            ++r;
        row.sobium = r;
        row.alg_geom = (I * I - I) / 2;
        rows.push_back(row);
    }
    return rows;
}

ModelWithBound exp_poly_model(int F, const std::vector<int>& degrees, int N, int K, int R) {
    if (F < 1 || static_cast<int>(degrees.size()) != F)
        throw std::invalid_argument("exp_poly_model: need one degree per factor");
    for (int d : degrees)
        if (d < 0)
            throw std::invalid_argument("exp_poly_model: degrees must be >= 0");
    int dsum = std::accumulate(degrees.begin(), degrees.end(), 0);
    int l = dsum + 2 * F;
    int bound = N - l;
    if (bound < 1)
        throw std::invalid_argument("exp_poly_model: bound N - (d_1+...+d_F+2F) must be positive");
    if (R < 0)
        R = bound;
    if (K < 0)
        K = R;

    ScalarExpr row;
    int offset = 0; // variables: [a_f, p_0f, ..., p_{d_f f}] per factor
    for (int f = 0; f < F; ++f) {
        int d = degrees[static_cast<size_t>(f)];
        ScalarExpr poly = ScalarExpr::variable(offset + 2);
        for (int j = 1; j <= d; ++j)
            poly = poly + ScalarExpr::variable(offset + 2 + j) * ScalarExpr::pow(ScalarExpr::row_index(), j);
        ScalarExpr term = poly * ScalarExpr::pow(ScalarExpr::variable(offset + 1), 0, true);
        row = row.valid() ? row + term : term;
        offset += 2 + d;
    }

    FactorModel model;
    model.K = K;
    model.N = N;
    model.R = R;
    model.l = l;
    model.domain = Domain::Complex;
    model.scaling = ScalingFlag::DeclaredTrue;
    model.columns = ColumnModel::from_template(std::move(row), Transform::identity(l), l, N);
    model.validate();
    return {std::move(model), bound};
}

ModelWithBound rational_model(int p, int q, int N, int K, int R) {
    if (q < 1)
        throw std::invalid_argument("rational_model: requires q >= 1");
    if (p < 0)
        throw std::invalid_argument("rational_model: requires p >= 0");
    int bound = N - (p + q + 1);
    if (bound < 1)
        throw std::invalid_argument("rational_model: bound N - (p+q+1) must be positive");
    int l = p + q + 2;
    if (R < 0)
        R = bound;
    if (K < 0)
        K = N;

    auto poly_in_n = [](int first_var, int degree) {
        ScalarExpr acc = ScalarExpr::variable(first_var);
        for (int j = 1; j <= degree; ++j)
            acc = acc + ScalarExpr::variable(first_var + j) * ScalarExpr::pow(ScalarExpr::row_index(), j);
        return acc;
    };
    ScalarExpr row = poly_in_n(1, p) / poly_in_n(p + 2, q);

    FactorModel model;
    model.K = K;
    model.N = N;
    model.R = R;
    model.l = l;
    model.domain = Domain::Complex;
    model.scaling = ScalingFlag::DeclaredTrue;
    model.columns = ColumnModel::from_template(std::move(row), Transform::identity(l), l, N);
    model.validate();
    return {std::move(model), bound};
}

ModelWithBound example_model(int N, int K, int R) {
    if (N <= 6)
        throw std::invalid_argument("example_model: requires N > 6");
    int bound = N - 6;
    if (R < 0)
        R = bound;
    if (K < 0)
        K = N;

    using SE = ScalarExpr;
    SE n = SE::row_index();
    SE x1 = SE::variable(1), x2 = SE::variable(2), x3 = SE::variable(3);
    SE x4 = SE::variable(4), x5 = SE::variable(5), x6 = SE::variable(6);
    SE one = SE::constant(1.0), two = SE::constant(2.0);

    // cos(alpha n + phi) = Q_n(t4) (1-t5^2)/(1+t5^2) - R_n(t4) 2 t5/(1+t5^2)
    // with t4 = tan(alpha/2), t5 = tan(phi/2); cos(beta n) = P_n(cos beta).
    SE cos_phase = SE::builtin(BuiltinFn::TanQ, x4) * (one - SE::pow(x5, 2)) / (one + SE::pow(x5, 2)) -
                   SE::builtin(BuiltinFn::TanR, x4) * (two * x5) / (one + SE::pow(x5, 2));
    SE row = SE::pow(x1, 0, true) / n + ((x2 + n) / (x3 + n)) * cos_phase + SE::builtin(BuiltinFn::ChebP, x6);

    Transform t = Transform::identity(6);
    t.coords[3].kind = TransformKind::TanHalf;
    t.coords[4].kind = TransformKind::TanHalf;
    t.coords[5].kind = TransformKind::Cos;

    FactorModel model;
    model.K = K;
    model.N = N;
    model.R = R;
    model.l = 6;
    model.domain = Domain::Real;
    model.scaling = ScalingFlag::DeclaredTrue;
    model.columns = ColumnModel::from_template(std::move(row), std::move(t), 6, N);
    model.validate();
    return {std::move(model), bound};
}

} // namespace smf
