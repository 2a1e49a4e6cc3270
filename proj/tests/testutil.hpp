#pragma once

#include <cmath>

#include "smf/apps.hpp"
#include "smf/model.hpp"
#include "smf/rng.hpp"

// Shared oracles and generators. Everything here is independent of the
// library code paths it is used to check.
namespace testutil {

using smf::cxd;
using smf::MatrixXcd;
using smf::VectorXcd;

// Central finite differences of r at x with complex step h along each
// variable; the reference for the forward-mode Jacobian.
inline MatrixXcd fd_jacobian_r(const smf::ColumnModel& cm, const VectorXcd& x, double h = 1e-6) {
    MatrixXcd jac(cm.rows(), cm.vars());
    for (int j = 0; j < cm.vars(); ++j) {
        VectorXcd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        jac.col(j) = (smf::eval_r(cm, xp) - smf::eval_r(cm, xm)) / (2.0 * h);
    }
    return jac;
}

inline MatrixXcd fd_jacobian_b(const smf::ColumnModel& cm, const VectorXcd& zeta, double h = 1e-6) {
    MatrixXcd jac(cm.rows(), cm.vars());
    for (int j = 0; j < cm.vars(); ++j) {
        VectorXcd zp = zeta, zm = zeta;
        zp(j) += h;
        zm(j) -= h;
        jac.col(j) = (smf::eval_b(cm, zp) - smf::eval_b(cm, zm)) / (2.0 * h);
    }
    return jac;
}

// Direct trigonometric form of the mixed example family,
// s(n) = z1^n/n + ((z2+n)/(z3+n)) cos(z4 n + z5) + cos(z6 n),
// with no half-angle rationalization anywhere.
inline double example_signal(const Eigen::VectorXd& z, int n) {
    double t = static_cast<double>(n);
    return std::pow(z(0), t) / t + ((z(1) + t) / (z(2) + t)) * std::cos(z(3) * t + z(4)) + std::cos(z(5) * t);
}

inline VectorXcd random_complex_vector(smf::Prng& rng, int n) {
    VectorXcd v(n);
    for (int j = 0; j < n; ++j)
        v(j) = rng.complex_gaussian();
    return v;
}

inline VectorXcd random_real_vector(smf::Prng& rng, int n) {
    VectorXcd v(n);
    for (int j = 0; j < n; ++j)
        v(j) = cxd(rng.gaussian(), 0.0);
    return v;
}

// Draws one model from the shipped families, cycling deterministically.
inline smf::FactorModel random_family_model(int index) {
    switch (index % 4) {
    case 0:
        return smf::rational_model(1 + index % 2, 1 + (index / 2) % 2, 12).model;
    case 1:
        return smf::exp_poly_model(1 + index % 2, index % 2 ? std::vector<int>{1, 0} : std::vector<int>{2}, 12).model;
    case 2:
        return smf::sobi_model(2 + index % 2, 3);
    default:
        return smf::example_model(8 + index % 3).model;
    }
}

} // namespace testutil
