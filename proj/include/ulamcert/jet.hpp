#pragma once

#include "ulamcert/interval.hpp"

namespace ulamcert {

// Value + first + second derivative enclosures at a point enclosure;
// propagated by the usual forward-mode rules.
struct Jet2 {
    Interval val;
    Interval d1;
    Interval d2;

    static Jet2 variable(const Interval& x) {
        return {x, Interval(1.0, 1.0), Interval(0.0, 0.0)};
    }
    static Jet2 constant(const Interval& c) {
        return {c, Interval(0.0, 0.0), Interval(0.0, 0.0)};
    }
};

inline Jet2 operator-(const Jet2& a) { return {-a.val, -a.d1, -a.d2}; }

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
    return {a.val + b.val, a.d1 + b.d1, a.d2 + b.d2};
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
    return {a.val - b.val, a.d1 - b.d1, a.d2 - b.d2};
}
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    return {a.val * b.val,
            a.d1 * b.val + a.val * b.d1,
            a.d2 * b.val + Interval(2.0, 2.0) * a.d1 * b.d1 + a.val * b.d2};
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) {
    Jet2 q;
    q.val = a.val / b.val;
    q.d1 = (a.d1 - q.val * b.d1) / b.val;
    q.d2 = (a.d2 - Interval(2.0, 2.0) * q.d1 * b.d1 - q.val * b.d2) / b.val;
    return q;
}

// abs at a straddling value: strict mode refuses, hull mode returns the hull
// of the two one-sided jets (callers needing distortion bounds subdivide).
enum class JetMode { strict, hull };

inline Jet2 abs(const Jet2& a, JetMode mode) {
    if (a.val.lo >= 0.0) return a;
    if (a.val.hi <= 0.0) return -a;
    if (mode == JetMode::strict)
        throw NonSmoothError("abs differentiated across its kink");
    return {abs(a.val), hull(a.d1, -a.d1), hull(a.d2, -a.d2)};
}

// g^(p/q) via r*g^(r-1)*g' and r*(r-1)*g^(r-2)*g'^2 + r*g^(r-1)*g''.
// For fractional r the value enclosure must be nonnegative; with 0 in the
// value and a negative shifted exponent the derivative enclosures acquire an
// infinite endpoint, which downstream code treats as unbounded-derivative.
inline Jet2 pow(const Jet2& a, long long p, long long q, JetMode mode) {
    if (q < 0) {
        p = -p;
        q = -q;
    }
    if (p % q == 0) {
        const long long n = p / q;
        if (n == 0) return Jet2::constant(Interval(1.0, 1.0));
        if (n == 1) return a;
        const Interval r = Interval::exact(double(n));
        const Interval vm1 = pow_int(a.val, n - 1);
        const Interval vm2 = pow_int(a.val, n - 2);
        Jet2 out;
        out.val = pow_int(a.val, n);
        out.d1 = r * vm1 * a.d1;
        out.d2 = r * (r - Interval(1.0, 1.0)) * vm2 * sqr(a.d1) + r * vm1 * a.d2;
        return out;
    }
    if (a.val.lo < 0.0) {
        if (mode == JetMode::strict)
            throw NonSmoothError("fractional power of a partially negative enclosure");
        throw DomainError("fractional power of a partially negative enclosure");
    }
    const Interval r = interval_from_ratio(p, q);
    auto shifted = [&](long long off) { return pow_rational(a.val, p + off * q, q); };
    Jet2 out;
    out.val = shifted(0);
    out.d1 = r * shifted(-1) * a.d1;
    out.d2 = r * (r - Interval(1.0, 1.0)) * shifted(-2) * sqr(a.d1) + r * shifted(-1) * a.d2;
    return out;
}

} // namespace ulamcert
