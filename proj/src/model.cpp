#include "smf/model.hpp"

#include <cmath>

#include "smf/rng.hpp"

namespace smf {

namespace {

using cxldv = std::vector<cxld>;

constexpr double kTransformTol = 1e-12;

cxld to_ld(cxd v) { return {static_cast<long double>(v.real()), static_cast<long double>(v.imag())}; }
cxd to_d(cxld v) { return {static_cast<double>(v.real()), static_cast<double>(v.imag())}; }

} // namespace

const char* transform_name(TransformKind k) {
    switch (k) {
    case TransformKind::Identity:
        return "id";
    case TransformKind::Exp:
        return "exp";
    case TransformKind::TanHalf:
        return "tan_half";
    case TransformKind::Cos:
        return "cos";
    case TransformKind::Sin:
        return "sin";
    case TransformKind::Affine:
        return "affine";
    }
    return "?";
}

cxd Transform1d::value(cxd zeta, int coord) const {
    switch (kind) {
    case TransformKind::Identity:
        return zeta;
    case TransformKind::Exp:
        return std::exp(zeta);
    case TransformKind::TanHalf: {
        cxd c = std::cos(zeta / 2.0);
        if (std::abs(c) < kTransformTol)
            throw TransformSingular(coord);
        return std::sin(zeta / 2.0) / c;
    }
    case TransformKind::Cos:
        return std::cos(zeta);
    case TransformKind::Sin:
        return std::sin(zeta);
    case TransformKind::Affine:
        return affine_a + affine_b * zeta;
    }
    throw std::logic_error("transform value: unreachable");
}

cxd Transform1d::derivative(cxd zeta, int coord) const {
    switch (kind) {
    case TransformKind::Identity:
        return 1.0;
    case TransformKind::Exp:
        return std::exp(zeta);
    case TransformKind::TanHalf: {
        cxd c = std::cos(zeta / 2.0);
        if (std::abs(c) < kTransformTol)
            throw TransformSingular(coord);
        return 0.5 / (c * c);
    }
    case TransformKind::Cos:
        return -std::sin(zeta);
    case TransformKind::Sin:
        return std::cos(zeta);
    case TransformKind::Affine:
        return affine_b;
    }
    throw std::logic_error("transform derivative: unreachable");
}

Transform Transform::identity(int l) {
    Transform t;
    t.coords.assign(static_cast<size_t>(l), Transform1d{});
    return t;
}

VectorXcd Transform::apply(const VectorXcd& zeta) const {
    VectorXcd x(zeta.size());
    for (int j = 0; j < zeta.size(); ++j)
        x(j) = coords[static_cast<size_t>(j)].value(zeta(j), j + 1);
    return x;
}

ColumnModel ColumnModel::from_template(ScalarExpr row_template, Transform t, int l, int N) {
    if (!row_template.valid())
        throw std::invalid_argument("ColumnModel: empty row template");
    std::vector<ScalarExpr> rows(static_cast<size_t>(N), row_template);
    ColumnModel cm = from_rows(std::move(rows), std::move(t), l);
    cm.single_template_ = true;
    cm.templates_ = {std::move(row_template)};
    return cm;
}

ColumnModel ColumnModel::from_rows(std::vector<ScalarExpr> row_templates, Transform t, int l) {
    if (row_templates.empty())
        throw std::invalid_argument("ColumnModel: at least one row required");
    if (l < 1)
        throw std::invalid_argument("ColumnModel: l must be >= 1");
    if (t.size() == 0)
        t = Transform::identity(l);
    if (t.size() != l)
        throw std::invalid_argument("ColumnModel: transform has wrong coordinate count");
    for (const auto& c : t.coords)
        if (c.kind == TransformKind::Affine && c.affine_b == cxd(0.0))
            throw std::invalid_argument("ColumnModel: affine transform must be non-constant (b != 0)");

    ColumnModel cm;
    cm.l_ = l;
    cm.n_ = static_cast<int>(row_templates.size());
    cm.transform_ = std::move(t);
    cm.single_template_ = false;
    cm.rows_.reserve(row_templates.size());
    for (int n = 1; n <= cm.n_; ++n) {
        const ScalarExpr& tpl = row_templates[static_cast<size_t>(n - 1)];
        if (!tpl.valid())
            throw std::invalid_argument("ColumnModel: empty row expression");
        if (tpl.max_variable() > l)
            throw std::invalid_argument("ColumnModel: row " + std::to_string(n) + " references x" +
                                        std::to_string(tpl.max_variable()) + " but l = " + std::to_string(l));
        ScalarExpr row = tpl.instantiate_row(n);
        auto [num, den] = row.as_ratio();
        cm.rows_.push_back(RationalRow{std::move(num), std::move(den)});
    }
    cm.templates_ = std::move(row_templates);
    cm.validate_denominators();
    return cm;
}

void ColumnModel::validate_denominators() const {
    // A denominator identically zero shows up as zero at generic points; 8
    // random complex probes with a fixed stream make this deterministic.
    Prng rng = Prng::derived(0x5eed0de1ULL, 77);
    for (int n = 1; n <= n_; ++n) {
        const RationalRow& row = rows_[static_cast<size_t>(n - 1)];
        bool nonzero = false;
        for (int probe = 0; probe < 8 && !nonzero; ++probe) {
            cxldv x(static_cast<size_t>(l_));
            for (auto& v : x)
                v = to_ld(rng.complex_gaussian());
            if (std::abs(row.den.eval(x)) > 1e-14)
                nonzero = true;
        }
        if (!nonzero)
            throw std::invalid_argument("ColumnModel: denominator of row " + std::to_string(n) +
                                        " is identically zero");
    }
}

int FactorModel::a_param_count() const {
    if (std::holds_alternative<GenericDenseA>(a_spec))
        return K * R;
    return std::get<ExpressionA>(a_spec).param_count;
}

void FactorModel::validate() const {
    if (K < 1 || N < 1 || R < 1 || l < 1)
        throw std::invalid_argument("FactorModel: K, N, R, l must all be >= 1");
    if (!columns)
        throw std::invalid_argument("FactorModel: missing column model");
    if (columns->rows() != N)
        throw std::invalid_argument("FactorModel: column model has " + std::to_string(columns->rows()) +
                                    " rows, expected N = " + std::to_string(N));
    if (columns->vars() != l)
        throw std::invalid_argument("FactorModel: column model has " + std::to_string(columns->vars()) +
                                    " variables, expected l = " + std::to_string(l));
    if (const auto* ea = std::get_if<ExpressionA>(&a_spec)) {
        if (static_cast<int>(ea->entries.size()) != K * R)
            throw std::invalid_argument("FactorModel: expression A has wrong entry count");
        for (const auto& e : ea->entries)
            if (e.max_variable() > ea->param_count || e.contains_row_index())
                throw std::invalid_argument("FactorModel: expression A entry out of parameter range");
    }
}

namespace {

cxldv to_ld_vector(const VectorXcd& x) {
    cxldv v(static_cast<size_t>(x.size()));
    for (int j = 0; j < x.size(); ++j)
        v[static_cast<size_t>(j)] = to_ld(x(j));
    return v;
}

// Evaluates row n of the model with the pole guard applied.
cxld eval_row_guarded(const RationalRow& row, const cxldv& x, int n) {
    cxld p = row.num.eval(x);
    cxld q = row.den.eval(x);
    if (std::abs(q) <= kPoleEps * (1.0L + std::abs(p)))
        throw PoleError(n);
    return p / q;
}

} // namespace

VectorXcd eval_r(const ColumnModel& cm, const VectorXcd& x) {
    if (x.size() != cm.vars())
        throw std::invalid_argument("eval_r: point has wrong dimension");
    cxldv xl = to_ld_vector(x);
    VectorXcd out(cm.rows());
    for (int n = 1; n <= cm.rows(); ++n)
        out(n - 1) = to_d(eval_row_guarded(cm.rational_rows()[static_cast<size_t>(n - 1)], xl, n));
    return out;
}

VectorXcd eval_b(const ColumnModel& cm, const VectorXcd& zeta) {
    return eval_r(cm, cm.transform().apply(zeta));
}

namespace {

MatrixXcd jacobian_rows(const ColumnModel& cm, const std::vector<DualVector>& seeded) {
    const int l = cm.vars();
    MatrixXcd jac(cm.rows(), l);
    for (int n = 1; n <= cm.rows(); ++n) {
        const RationalRow& row = cm.rational_rows()[static_cast<size_t>(n - 1)];
        DualVector p = row.num.eval_dual(seeded);
        DualVector q = row.den.eval_dual(seeded);
        if (std::abs(q.value) <= kPoleEps * (1.0L + std::abs(p.value)))
            throw PoleError(n);
        DualVector ratio = p / q;
        for (int j = 0; j < l; ++j)
            jac(n - 1, j) = to_d(ratio.partials[static_cast<size_t>(j)]);
    }
    return jac;
}

} // namespace

MatrixXcd jacobian_r(const ColumnModel& cm, const VectorXcd& x) {
    if (x.size() != cm.vars())
        throw std::invalid_argument("jacobian_r: point has wrong dimension");
    const int l = cm.vars();
    std::vector<DualVector> seeded;
    seeded.reserve(static_cast<size_t>(l));
    for (int j = 1; j <= l; ++j)
        seeded.push_back(DualVector::variable(to_ld(x(j - 1)), j, l));
    return jacobian_rows(cm, seeded);
}

MatrixXcd jacobian_f(const Transform& t, const VectorXcd& zeta) {
    if (zeta.size() != t.size())
        throw std::invalid_argument("jacobian_f: point has wrong dimension");
    MatrixXcd jac = MatrixXcd::Zero(t.size(), t.size());
    for (int j = 0; j < t.size(); ++j)
        jac(j, j) = t.coords[static_cast<size_t>(j)].derivative(zeta(j), j + 1);
    return jac;
}

MatrixXcd jacobian_b(const ColumnModel& cm, const VectorXcd& zeta) {
    if (zeta.size() != cm.vars())
        throw std::invalid_argument("jacobian_b: point has wrong dimension");
    const int l = cm.vars();
    std::vector<DualVector> seeded;
    seeded.reserve(static_cast<size_t>(l));
    for (int j = 1; j <= l; ++j) {
        const Transform1d& f = cm.transform().coords[static_cast<size_t>(j - 1)];
        DualVector d = DualVector::constant(to_ld(f.value(zeta(j - 1), j)), l);
        d.partials[static_cast<size_t>(j - 1)] = to_ld(f.derivative(zeta(j - 1), j));
        seeded.push_back(std::move(d));
    }
    return jacobian_rows(cm, seeded);
}

MatrixXcd eval_expression_a(const ExpressionA& a, int K, int R, const VectorXcd& theta) {
    if (theta.size() != a.param_count)
        throw std::invalid_argument("eval_expression_a: wrong parameter count");
    cxldv t = to_ld_vector(theta);
    MatrixXcd out(K, R);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < R; ++j)
            out(i, j) = to_d(a.entries[static_cast<size_t>(i * R + j)].eval(t));
    return out;
}

} // namespace smf
