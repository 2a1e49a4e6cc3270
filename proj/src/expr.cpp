#include "smf/expr.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "smf/trig.hpp"

namespace smf {

struct ScalarExpr::Node {
    ExprKind kind;
    cxld value{};            // Constant
    int index = 0;           // Variable: 1-based index; Pow: exponent
    bool exp_is_row = false; // Pow: exponent is the row token
    BuiltinFn fn{};
    std::shared_ptr<const Node> a, b;
};

namespace {

DualVector dual_one_like(const DualVector& d) {
    return DualVector::constant(1.0L, static_cast<int>(d.partials.size()));
}

} // namespace

DualVector DualVector::operator+(const DualVector& o) const {
    DualVector r = *this;
    r.value += o.value;
    for (size_t j = 0; j < partials.size(); ++j)
        r.partials[j] += o.partials[j];
    return r;
}

DualVector DualVector::operator-(const DualVector& o) const {
    DualVector r = *this;
    r.value -= o.value;
    for (size_t j = 0; j < partials.size(); ++j)
        r.partials[j] -= o.partials[j];
    return r;
}

DualVector DualVector::operator*(const DualVector& o) const {
    DualVector r;
    r.value = value * o.value;
    r.partials.resize(partials.size());
    for (size_t j = 0; j < partials.size(); ++j)
        r.partials[j] = partials[j] * o.value + value * o.partials[j];
    return r;
}

DualVector DualVector::operator/(const DualVector& o) const {
    DualVector r;
    r.value = value / o.value;
    cxld inv2 = 1.0L / (o.value * o.value);
    r.partials.resize(partials.size());
    for (size_t j = 0; j < partials.size(); ++j)
        r.partials[j] = (partials[j] * o.value - value * o.partials[j]) * inv2;
    return r;
}

ScalarExpr ScalarExpr::constant(cxld v) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Constant;
    n->value = v;
    return ScalarExpr(std::move(n));
}

ScalarExpr ScalarExpr::variable(int index) {
    if (index < 1)
        throw std::invalid_argument("ScalarExpr: variable index must be >= 1");
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Variable;
    n->index = index;
    return ScalarExpr(std::move(n));
}

ScalarExpr ScalarExpr::row_index() {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::RowIndex;
    return ScalarExpr(std::move(n));
}

ScalarExpr ScalarExpr::binary(ExprKind op, ScalarExpr lhs, ScalarExpr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = op;
    n->a = lhs.node_;
    n->b = rhs.node_;
    return ScalarExpr(std::move(n));
}

ScalarExpr ScalarExpr::pow(ScalarExpr base, int exponent, bool exp_is_row) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Pow;
    n->a = base.node_;
    n->index = exponent;
    n->exp_is_row = exp_is_row;
    return ScalarExpr(std::move(n));
}

ScalarExpr ScalarExpr::builtin(BuiltinFn fn, ScalarExpr arg) {
    auto n = std::make_shared<Node>();
    n->kind = ExprKind::Builtin;
    n->fn = fn;
    n->a = arg.node_;
    return ScalarExpr(std::move(n));
}

ExprKind ScalarExpr::kind() const { return node_->kind; }
cxld ScalarExpr::constant_value() const { return node_->value; }
int ScalarExpr::variable_index() const { return node_->index; }

namespace {

bool is_one(const ScalarExpr& e) {
    return e.kind() == ExprKind::Constant && e.constant_value() == cxld(1.0L);
}

} // namespace

int ScalarExpr::max_variable() const {
    switch (node_->kind) {
    case ExprKind::Constant:
    case ExprKind::RowIndex:
        return 0;
    case ExprKind::Variable:
        return node_->index;
    case ExprKind::Pow:
    case ExprKind::Builtin:
        return ScalarExpr(node_->a).max_variable();
    default:
        return std::max(ScalarExpr(node_->a).max_variable(), ScalarExpr(node_->b).max_variable());
    }
}

bool ScalarExpr::contains_row_index() const {
    switch (node_->kind) {
    case ExprKind::Constant:
    case ExprKind::Variable:
        return false;
    case ExprKind::RowIndex:
        return true;
    case ExprKind::Pow:
        return node_->exp_is_row || ScalarExpr(node_->a).contains_row_index();
    case ExprKind::Builtin:
        return true; // builtins are row families by definition
    default:
        return ScalarExpr(node_->a).contains_row_index() || ScalarExpr(node_->b).contains_row_index();
    }
}

bool ScalarExpr::contains_builtin() const {
    switch (node_->kind) {
    case ExprKind::Constant:
    case ExprKind::Variable:
    case ExprKind::RowIndex:
        return false;
    case ExprKind::Builtin:
        return true;
    case ExprKind::Pow:
        return ScalarExpr(node_->a).contains_builtin();
    default:
        return ScalarExpr(node_->a).contains_builtin() || ScalarExpr(node_->b).contains_builtin();
    }
}

bool ScalarExpr::contains_division() const {
    switch (node_->kind) {
    case ExprKind::Constant:
    case ExprKind::Variable:
    case ExprKind::RowIndex:
        return false;
    case ExprKind::Div:
        return true;
    case ExprKind::Pow:
        return node_->index < 0 || ScalarExpr(node_->a).contains_division();
    case ExprKind::Builtin:
        return ScalarExpr(node_->a).contains_division();
    default:
        return ScalarExpr(node_->a).contains_division() || ScalarExpr(node_->b).contains_division();
    }
}

namespace {

// Sum of c_k * a^k over the nonzero coefficients, sharing the base subtree.
ScalarExpr poly_in(const trig::IntPoly& p, const ScalarExpr& a) {
    ScalarExpr acc;
    for (size_t k = 0; k < p.c.size(); ++k) {
        if (p.c[k] == 0)
            continue;
        ScalarExpr coeff = ScalarExpr::constant(cxld(static_cast<long double>(p.c[k])));
        ScalarExpr term = k == 0 ? coeff : coeff * ScalarExpr::pow(a, static_cast<int>(k));
        acc = acc.valid() ? acc + term : term;
    }
    return acc.valid() ? acc : ScalarExpr::constant(0.0);
}

} // namespace

ScalarExpr ScalarExpr::instantiate_row(int n) const {
    switch (node_->kind) {
    case ExprKind::Constant:
    case ExprKind::Variable:
        return *this;
    case ExprKind::RowIndex:
        return constant(cxld(static_cast<long double>(n)));
    case ExprKind::Pow: {
        ScalarExpr base = ScalarExpr(node_->a).instantiate_row(n);
        int e = node_->exp_is_row ? n : node_->index;
        return pow(std::move(base), e);
    }
    case ExprKind::Builtin: {
        ScalarExpr arg = ScalarExpr(node_->a).instantiate_row(n);
        switch (node_->fn) {
        case BuiltinFn::ChebP:
            return poly_in(trig::cheb_poly(n), arg);
        case BuiltinFn::TanQ: {
            auto qr = trig::tan_half_qr(n);
            return poly_in(qr.first.num, arg) / ScalarExpr::pow(constant(1.0) + arg * arg, n);
        }
        case BuiltinFn::TanR: {
            auto qr = trig::tan_half_qr(n);
            return poly_in(qr.second.num, arg) / ScalarExpr::pow(constant(1.0) + arg * arg, n);
        }
        }
        throw std::logic_error("unknown builtin");
    }
    default:
        return binary(node_->kind, ScalarExpr(node_->a).instantiate_row(n), ScalarExpr(node_->b).instantiate_row(n));
    }
}

std::pair<ScalarExpr, ScalarExpr> ScalarExpr::as_ratio() const {
    ScalarExpr one = constant(1.0);
    switch (node_->kind) {
    case ExprKind::Constant:
    case ExprKind::Variable:
        return {*this, one};
    case ExprKind::RowIndex:
    case ExprKind::Builtin:
        throw std::logic_error("as_ratio: expression must be instantiated at a row first");
    case ExprKind::Add:
    case ExprKind::Sub: {
        auto [na, da] = ScalarExpr(node_->a).as_ratio();
        auto [nb, db] = ScalarExpr(node_->b).as_ratio();
        ScalarExpr lhs = is_one(db) ? na : na * db;
        ScalarExpr rhs = is_one(da) ? nb : nb * da;
        ScalarExpr num = binary(node_->kind, std::move(lhs), std::move(rhs));
        ScalarExpr den = is_one(da) ? db : (is_one(db) ? da : da * db);
        return {std::move(num), std::move(den)};
    }
    case ExprKind::Mul: {
        auto [na, da] = ScalarExpr(node_->a).as_ratio();
        auto [nb, db] = ScalarExpr(node_->b).as_ratio();
        ScalarExpr den = is_one(da) ? db : (is_one(db) ? da : da * db);
        return {na * nb, std::move(den)};
    }
    case ExprKind::Div: {
        auto [na, da] = ScalarExpr(node_->a).as_ratio();
        auto [nb, db] = ScalarExpr(node_->b).as_ratio();
        ScalarExpr num = is_one(db) ? na : na * db;
        ScalarExpr den = is_one(da) ? nb : da * nb;
        return {std::move(num), std::move(den)};
    }
    case ExprKind::Pow: {
        if (node_->exp_is_row)
            throw std::logic_error("as_ratio: expression must be instantiated at a row first");
        auto [nb, db] = ScalarExpr(node_->a).as_ratio();
        int e = node_->index;
        if (e == 0)
            return {one, one};
        int k = e > 0 ? e : -e;
        ScalarExpr nk = pow(nb, k);
        ScalarExpr dk = is_one(db) ? db : pow(db, k);
        if (e > 0)
            return {std::move(nk), std::move(dk)};
        return {std::move(dk), std::move(nk)};
    }
    }
    throw std::logic_error("as_ratio: unreachable");
}

namespace {

template <class T>
T pow_int(const T& base, int k, const T& one) {
    if (k == 0)
        return one;
    bool neg = k < 0;
    int m = neg ? -k : k;
    T acc = one;
    T sq = base;
    while (m > 0) {
        if (m & 1)
            acc = acc * sq;
        m >>= 1;
        if (m > 0)
            sq = sq * sq;
    }
    return neg ? one / acc : acc;
}

} // namespace

cxld ScalarExpr::eval(const std::vector<cxld>& vars) const {
    switch (node_->kind) {
    case ExprKind::Constant:
        return node_->value;
    case ExprKind::Variable:
        return vars.at(static_cast<size_t>(node_->index - 1));
    case ExprKind::Add:
        return ScalarExpr(node_->a).eval(vars) + ScalarExpr(node_->b).eval(vars);
    case ExprKind::Sub:
        return ScalarExpr(node_->a).eval(vars) - ScalarExpr(node_->b).eval(vars);
    case ExprKind::Mul:
        return ScalarExpr(node_->a).eval(vars) * ScalarExpr(node_->b).eval(vars);
    case ExprKind::Div:
        return ScalarExpr(node_->a).eval(vars) / ScalarExpr(node_->b).eval(vars);
    case ExprKind::Pow: {
        if (node_->exp_is_row)
            throw std::logic_error("eval: row token present; instantiate the row first");
        return pow_int(ScalarExpr(node_->a).eval(vars), node_->index, cxld(1.0L));
    }
    case ExprKind::RowIndex:
    case ExprKind::Builtin:
        throw std::logic_error("eval: row token present; instantiate the row first");
    }
    throw std::logic_error("eval: unreachable");
}

DualVector ScalarExpr::eval_dual(const std::vector<DualVector>& vars) const {
    const int l = vars.empty() ? 0 : static_cast<int>(vars.front().partials.size());
    switch (node_->kind) {
    case ExprKind::Constant:
        return DualVector::constant(node_->value, l);
    case ExprKind::Variable:
        return vars.at(static_cast<size_t>(node_->index - 1));
    case ExprKind::Add:
        return ScalarExpr(node_->a).eval_dual(vars) + ScalarExpr(node_->b).eval_dual(vars);
    case ExprKind::Sub:
        return ScalarExpr(node_->a).eval_dual(vars) - ScalarExpr(node_->b).eval_dual(vars);
    case ExprKind::Mul:
        return ScalarExpr(node_->a).eval_dual(vars) * ScalarExpr(node_->b).eval_dual(vars);
    case ExprKind::Div:
        return ScalarExpr(node_->a).eval_dual(vars) / ScalarExpr(node_->b).eval_dual(vars);
    case ExprKind::Pow: {
        if (node_->exp_is_row)
            throw std::logic_error("eval_dual: row token present; instantiate the row first");
        DualVector base = ScalarExpr(node_->a).eval_dual(vars);
        DualVector one = dual_one_like(base);
        return pow_int(base, node_->index, one);
    }
    case ExprKind::RowIndex:
    case ExprKind::Builtin:
        throw std::logic_error("eval_dual: row token present; instantiate the row first");
    }
    throw std::logic_error("eval_dual: unreachable");
}

namespace {

std::string format_real(long double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.21Lg", v);
    return buf;
}

std::string format_constant(cxld v) {
    if (v.imag() == 0.0L)
        return format_real(v.real());
    std::string im = v.imag() == 1.0L ? "i" : (v.imag() == -1.0L ? "-i" : format_real(v.imag()) + "*i");
    if (v.real() == 0.0L)
        return im;
    if (v.imag() > 0.0L || im[0] != '-')
        return format_real(v.real()) + "+" + im;
    return format_real(v.real()) + im;
}

} // namespace

namespace {

// Precedence: Add/Sub = 1, Mul/Div = 2, Pow = 3, atoms = 4.
int print_prec(const ScalarExpr& e) {
    switch (e.kind()) {
    case ExprKind::Add:
    case ExprKind::Sub:
        return 1;
    case ExprKind::Mul:
    case ExprKind::Div:
        return 2;
    case ExprKind::Pow:
        return 3;
    default:
        return 4;
    }
}

std::string print_child(const ScalarExpr& e, int min_prec) {
    std::string s = e.to_string();
    bool parens = print_prec(e) < min_prec;
    if (!parens && e.kind() == ExprKind::Constant && min_prec > 1) {
        // -3 or 2+i must not merge with a surrounding * / ^ operator.
        cxld v = e.constant_value();
        parens = v.imag() != 0.0L || v.real() < 0.0L;
    }
    return parens ? "(" + s + ")" : s;
}

} // namespace

std::string ScalarExpr::to_string() const {
    switch (node_->kind) {
    case ExprKind::Constant:
        return format_constant(node_->value);
    case ExprKind::Variable:
        return "x" + std::to_string(node_->index);
    case ExprKind::RowIndex:
        return "n";
    case ExprKind::Add:
        return print_child(ScalarExpr(node_->a), 1) + " + " + print_child(ScalarExpr(node_->b), 2);
    case ExprKind::Sub:
        return print_child(ScalarExpr(node_->a), 1) + " - " + print_child(ScalarExpr(node_->b), 2);
    case ExprKind::Mul:
        return print_child(ScalarExpr(node_->a), 2) + "*" + print_child(ScalarExpr(node_->b), 3);
    case ExprKind::Div:
        return print_child(ScalarExpr(node_->a), 2) + "/" + print_child(ScalarExpr(node_->b), 3);
    case ExprKind::Pow: {
        std::string e = node_->exp_is_row ? "n" : std::to_string(node_->index);
        if (!node_->exp_is_row && node_->index < 0)
            e = "(" + e + ")";
        return print_child(ScalarExpr(node_->a), 4) + "^" + e;
    }
    case ExprKind::Builtin: {
        const char* name = node_->fn == BuiltinFn::ChebP ? "chebP" : (node_->fn == BuiltinFn::TanQ ? "tanQ" : "tanR");
        return std::string(name) + "(n, " + ScalarExpr(node_->a).to_string() + ")";
    }
    }
    throw std::logic_error("to_string: unreachable");
}

} // namespace smf
