#include "smf/trig.hpp"

#include <sstream>
#include <string>

namespace smf::trig {

namespace {

int128 checked_add(int128 a, int128 b) {
    int128 r;
    if (__builtin_add_overflow(a, b, &r))
        throw std::overflow_error("trig: integer coefficient overflow");
    return r;
}

int128 checked_mul(int128 a, int128 b) {
    int128 r;
    if (__builtin_mul_overflow(a, b, &r))
        throw std::overflow_error("trig: integer coefficient overflow");
    return r;
}

void check_order(int n) {
    if (n > kMaxOrder)
        throw std::overflow_error("trig: order exceeds exact-arithmetic guard (n <= 64)");
}

std::string int128_to_string(int128 v) {
    if (v == 0)
        return "0";
    bool neg = v < 0;
    unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
    std::string s;
    while (u > 0) {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    return neg ? "-" + s : s;
}

} // namespace

bool IntPoly::is_zero() const {
    for (int128 v : c)
        if (v != 0)
            return false;
    return true;
}

void IntPoly::trim() {
    while (c.size() > 1 && c.back() == 0)
        c.pop_back();
}

IntPoly IntPoly::operator+(const IntPoly& o) const {
    IntPoly r;
    r.c.resize(std::max(c.size(), o.c.size()), 0);
    for (size_t k = 0; k < r.c.size(); ++k) {
        int128 a = k < c.size() ? c[k] : 0;
        int128 b = k < o.c.size() ? o.c[k] : 0;
        r.c[k] = checked_add(a, b);
    }
    r.trim();
    return r;
}

IntPoly IntPoly::operator-(const IntPoly& o) const {
    IntPoly neg = o;
    for (int128& v : neg.c)
        v = -v;
    return *this + neg;
}

IntPoly IntPoly::operator*(const IntPoly& o) const {
    if (c.empty() || o.c.empty())
        return IntPoly{{0}};
    IntPoly r;
    r.c.assign(c.size() + o.c.size() - 1, 0);
    for (size_t a = 0; a < c.size(); ++a) {
        if (c[a] == 0)
            continue;
        for (size_t b = 0; b < o.c.size(); ++b)
            r.c[a + b] = checked_add(r.c[a + b], checked_mul(c[a], o.c[b]));
    }
    r.trim();
    return r;
}

bool IntPoly::operator==(const IntPoly& o) const {
    IntPoly d = *this - o;
    return d.is_zero();
}

long double IntPoly::eval(long double t) const {
    // The expanded coefficients alternate in sign and cancel by a factor of
    // up to 2^n near |t| = 1; quad-precision Horner keeps the sweep well
    // below the 1e-9 identity tolerance for every order the guard admits.
    __float128 acc = 0;
    __float128 tq = t;
    for (size_t k = c.size(); k-- > 0;)
        acc = acc * tq + static_cast<__float128>(c[k]);
    return static_cast<long double>(acc);
}

IntPoly int_poly(std::initializer_list<long long> coeffs) {
    IntPoly p;
    for (long long v : coeffs)
        p.c.push_back(v);
    if (p.c.empty())
        p.c.push_back(0);
    p.trim();
    return p;
}

double TrigRational::eval(double t) const {
    long double tt = t;
    return static_cast<double>(num.eval(tt) / den.eval(tt));
}

IntPoly one_plus_t2_pow(int n) {
    check_order(n);
    IntPoly base = int_poly({1, 0, 1});
    IntPoly acc = int_poly({1});
    for (int k = 0; k < n; ++k)
        acc = acc * base;
    return acc;
}

IntPoly cheb_poly(int n) {
    if (n < 0)
        throw std::invalid_argument("cheb_poly: n must be nonnegative");
    check_order(n);

    // Pascal row of binomials C(n, j) stays well inside int128 for n <= 64.
    std::vector<int128> binom(static_cast<size_t>(n) + 1, 0);
    binom[0] = 1;
    for (int row = 1; row <= n; ++row)
        for (int j = row; j >= 1; --j)
            binom[static_cast<size_t>(j)] = checked_add(binom[static_cast<size_t>(j)], binom[static_cast<size_t>(j - 1)]);

    IntPoly acc = int_poly({0});
    IntPoly x2m1 = int_poly({-1, 0, 1});
    IntPoly pow_x2m1 = int_poly({1});
    for (int k = 0; 2 * k <= n; ++k) {
        // term: C(n,2k) * (x^2-1)^k * x^(n-2k)
        IntPoly term = pow_x2m1;
        for (int128& v : term.c)
            v = checked_mul(v, binom[static_cast<size_t>(2 * k)]);
        term.c.insert(term.c.begin(), static_cast<size_t>(n - 2 * k), 0);
        acc = acc + term;
        pow_x2m1 = pow_x2m1 * x2m1;
    }
    return acc;
}

std::pair<TrigRational, TrigRational> tan_half_qr(int n) {
    if (n < 1)
        throw std::invalid_argument("tan_half_qr: n must be positive");
    check_order(n);

    // ((1 - t^2) + 2it)^n, tracked as separate real/imaginary integer polys.
    IntPoly re = int_poly({1});
    IntPoly im = int_poly({0});
    IntPoly base_re = int_poly({1, 0, -1});
    IntPoly base_im = int_poly({0, 2});
    for (int k = 0; k < n; ++k) {
        IntPoly nre = re * base_re - im * base_im;
        IntPoly nim = re * base_im + im * base_re;
        re = std::move(nre);
        im = std::move(nim);
    }

    IntPoly den = one_plus_t2_pow(n);
    TrigRational q{n, std::move(re), den};
    TrigRational r{n, std::move(im), std::move(den)};
    return {std::move(q), std::move(r)};
}

std::string to_string(const IntPoly& p, const std::string& var) {
    std::ostringstream os;
    bool first = true;
    for (size_t k = p.c.size(); k-- > 0;) {
        if (p.c[k] == 0 && !(first && k == 0))
            continue;
        int128 v = p.c[k];
        if (first) {
            if (v < 0) {
                os << "-";
                v = -v;
            }
            first = false;
        } else {
            os << (v < 0 ? " - " : " + ");
            v = v < 0 ? -v : v;
        }
        if (v != 1 || k == 0)
            os << int128_to_string(v);
        if (k >= 1) {
            if (v != 1)
                os << "*";
            os << var;
            if (k >= 2)
                os << "^" << k;
        }
    }
    if (first)
        os << "0";
    return os.str();
}

} // namespace smf::trig
