#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

namespace smf::trig {

using int128 = __int128;

// Maximum multiple-angle order. Coefficients of the half-angle numerators are
// bounded by C(2n,n); at n = 64 that is ~2.4e37, just inside the int128 range.
inline constexpr int kMaxOrder = 64;

// Dense integer polynomial in one variable, coefficient k belongs to t^k.
// All arithmetic is exact; any wraparound throws std::overflow_error.
struct IntPoly {
    std::vector<int128> c;

    int degree() const { return static_cast<int>(c.size()) - 1; }
    bool is_zero() const;
    void trim();

    IntPoly operator+(const IntPoly& o) const;
    IntPoly operator-(const IntPoly& o) const;
    IntPoly operator*(const IntPoly& o) const;
    bool operator==(const IntPoly& o) const;

    // Stable Horner evaluation in extended precision.
    long double eval(long double t) const;
};

IntPoly int_poly(std::initializer_list<long long> coeffs);

// Rational function num(t)/(1+t^2)^degree arising from half-angle
// rationalization of cos/sin at multiple angles.
struct TrigRational {
    int degree = 0;
    IntPoly num;
    IntPoly den; // (1+t^2)^degree, expanded

    double eval(double t) const;
};

// Coefficients of the polynomial satisfying cos(n*z) = P_n(cos z), built from
// the explicit binomial sum over (cos^2 z - 1)^k terms.
IntPoly cheb_poly(int n);

// {Q_n, R_n} with cos(n*z) = Q_n(tan(z/2)) and sin(n*z) = R_n(tan(z/2)),
// obtained by expanding ((1 - t^2) + 2it)^n over the integers.
std::pair<TrigRational, TrigRational> tan_half_qr(int n);

// (1+t^2)^n, expanded. Shared by tan_half_qr and the exact identity checks.
IntPoly one_plus_t2_pow(int n);

std::string to_string(const IntPoly& p, const std::string& var = "t");

} // namespace smf::trig
