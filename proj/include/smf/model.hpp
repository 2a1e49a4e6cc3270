#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "smf/expr.hpp"

namespace smf {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// Relative denominator guard: a row evaluation is a pole when
// |q_n(x)| <= pole_eps * (1 + |p_n(x)|).
inline constexpr double kPoleEps = 1e-12;

struct PoleError : std::runtime_error {
    int row;
    explicit PoleError(int row_)
        : std::runtime_error("denominator vanishes at row " + std::to_string(row_)), row(row_) {}
};

struct TransformSingular : std::runtime_error {
    int coord;
    explicit TransformSingular(int coord_)
        : std::runtime_error("coordinate transform undefined at coordinate " + std::to_string(coord_)), coord(coord_) {}
};

struct SamplingExhausted : std::runtime_error {
    explicit SamplingExhausted(const std::string& what) : std::runtime_error(what) {}
};

enum class TransformKind { Identity, Exp, TanHalf, Cos, Sin, Affine };

const char* transform_name(TransformKind k);

// One entrywise coordinate function f_j. Every primitive is analytic and
// non-constant, so the transform Jacobian determinant is not identically zero.
struct Transform1d {
    TransformKind kind = TransformKind::Identity;
    cxd affine_a{0.0};
    cxd affine_b{1.0};

    cxd value(cxd zeta, int coord) const;      // throws TransformSingular
    cxd derivative(cxd zeta, int coord) const; // throws TransformSingular
};

struct Transform {
    std::vector<Transform1d> coords;

    int size() const { return static_cast<int>(coords.size()); }
    static Transform identity(int l);
    VectorXcd apply(const VectorXcd& zeta) const;
};

// Concrete rational row p_n/q_n: division-free numerator and denominator.
struct RationalRow {
    ScalarExpr num;
    ScalarExpr den;
};

// The structured column family b(zeta) = r(f(zeta)): N rational rows over
// x1..xl composed with an entrywise coordinate transform.
class ColumnModel {
  public:
    // Single template broadcast over rows 1..N.
    static ColumnModel from_template(ScalarExpr row_template, Transform t, int l, int N);
    // One expression per row; the row token inside row k refers to k (1-based).
    static ColumnModel from_rows(std::vector<ScalarExpr> row_templates, Transform t, int l);

    int rows() const { return n_; }
    int vars() const { return l_; }
    const Transform& transform() const { return transform_; }
    const std::vector<RationalRow>& rational_rows() const { return rows_; }

    bool has_single_template() const { return single_template_; }
    const std::vector<ScalarExpr>& templates() const { return templates_; }

  private:
    ColumnModel() = default;
    void validate_denominators() const;

    int n_ = 0;
    int l_ = 0;
    Transform transform_;
    bool single_template_ = true;
    std::vector<ScalarExpr> templates_;
    std::vector<RationalRow> rows_;
};

enum class Domain { Real, Complex };
enum class ScalingFlag { DeclaredTrue, DeclaredFalse, Unknown };

// A-factor specification: a generic dense K x R matrix, or an explicit
// expression matrix over its own parameter vector (library-only).
struct GenericDenseA {};
struct ExpressionA {
    int param_count = 0;
    std::vector<ScalarExpr> entries; // K*R entries, row-major
};
using ASpec = std::variant<GenericDenseA, ExpressionA>;

struct FactorModel {
    int K = 0;
    int N = 0;
    int R = 0;
    int l = 0;
    Domain domain = Domain::Complex;
    ScalingFlag scaling = ScalingFlag::Unknown;
    ASpec a_spec = GenericDenseA{};
    std::optional<ColumnModel> columns;

    const ColumnModel& column_model() const { return *columns; }
    // Free parameters of the A factor (K*R for the generic dense case).
    int a_param_count() const;
    void validate() const;
};

// r(x) = [p_1(x)/q_1(x), ..., p_N(x)/q_N(x)]. Throws PoleError on guard hits.
VectorXcd eval_r(const ColumnModel& cm, const VectorXcd& x);

// b(zeta) = r(f(zeta)). Throws TransformSingular / PoleError.
VectorXcd eval_b(const ColumnModel& cm, const VectorXcd& zeta);

// Entry (i,j) = d(p_i/q_i)/dx_j by forward-mode dual numbers.
MatrixXcd jacobian_r(const ColumnModel& cm, const VectorXcd& x);

// Diagonal matrix with entries f_j'(zeta_j).
MatrixXcd jacobian_f(const Transform& t, const VectorXcd& zeta);

// Jacobian of the composition b = r o f, computed in one dual-number pass
// seeded with the transform derivatives.
MatrixXcd jacobian_b(const ColumnModel& cm, const VectorXcd& zeta);

// Evaluates an ExpressionA at a parameter point, reshaped to K x R.
MatrixXcd eval_expression_a(const ExpressionA& a, int K, int R, const VectorXcd& theta);

} // namespace smf
