#pragma once

#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "smf/rng.hpp"

namespace smf {

using cxld = std::complex<long double>;

enum class ExprKind { Constant, Variable, RowIndex, Add, Sub, Mul, Div, Pow, Builtin };

// Row-indexed builtins. They stand for families of rational functions in the
// row index and disappear when a row is instantiated at a concrete index.
enum class BuiltinFn { ChebP, TanQ, TanR };

// Forward-mode derivative carrier: a value plus its gradient with respect to
// the l model variables.
struct DualVector {
    cxld value{};
    std::vector<cxld> partials;

    static DualVector constant(cxld v, int l) {
        DualVector d;
        d.value = v;
        d.partials.assign(static_cast<size_t>(l), cxld{});
        return d;
    }
    static DualVector variable(cxld v, int j, int l) {
        DualVector d = constant(v, l);
        d.partials[static_cast<size_t>(j - 1)] = 1.0L;
        return d;
    }

    DualVector operator+(const DualVector& o) const;
    DualVector operator-(const DualVector& o) const;
    DualVector operator*(const DualVector& o) const;
    DualVector operator/(const DualVector& o) const;
};

// Immutable expression tree over variables x1..xl, complex constants and the
// row-index token. Copies share structure; every value is safe to use from
// multiple threads once built.
class ScalarExpr {
  public:
    ScalarExpr() = default;

    static ScalarExpr constant(cxld v);
    static ScalarExpr constant(double v) { return constant(cxld(v)); }
    static ScalarExpr variable(int index); // 1-based
    static ScalarExpr row_index();
    static ScalarExpr binary(ExprKind op, ScalarExpr lhs, ScalarExpr rhs);
    // Exponent is an integer literal or the row-index token (exp_is_row).
    static ScalarExpr pow(ScalarExpr base, int exponent, bool exp_is_row = false);
    // Builtins take the row index implicitly; arg is the evaluation point.
    static ScalarExpr builtin(BuiltinFn fn, ScalarExpr arg);

    friend ScalarExpr operator+(ScalarExpr a, ScalarExpr b) { return binary(ExprKind::Add, std::move(a), std::move(b)); }
    friend ScalarExpr operator-(ScalarExpr a, ScalarExpr b) { return binary(ExprKind::Sub, std::move(a), std::move(b)); }
    friend ScalarExpr operator*(ScalarExpr a, ScalarExpr b) { return binary(ExprKind::Mul, std::move(a), std::move(b)); }
    friend ScalarExpr operator/(ScalarExpr a, ScalarExpr b) { return binary(ExprKind::Div, std::move(a), std::move(b)); }

    bool valid() const { return node_ != nullptr; }
    ExprKind kind() const;
    cxld constant_value() const;
    int variable_index() const;

    // Largest variable index referenced (0 when none).
    int max_variable() const;
    bool contains_row_index() const;
    bool contains_builtin() const;
    bool contains_division() const;

    // Substitutes the row-index token by n and expands builtins into explicit
    // rational expressions; the result is a pure rational expression.
    ScalarExpr instantiate_row(int n) const;

    // Rewrites a row-free expression as numerator/denominator with both sides
    // division-free (negative powers fold into the denominator).
    std::pair<ScalarExpr, ScalarExpr> as_ratio() const;

    // Evaluation of a row-free, builtin-free expression. `vars` is indexed by
    // variable number - 1 and must cover max_variable().
    cxld eval(const std::vector<cxld>& vars) const;
    DualVector eval_dual(const std::vector<DualVector>& vars) const;

    std::string to_string() const;

  private:
    struct Node;
    explicit ScalarExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

} // namespace smf
