#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "ulamcert/errors.hpp"

namespace ulamcert {

// Closed interval [lo, hi] of doubles, endpoints possibly infinite.
//
// Rounding policy (identical across the whole project): every primitive
// operation is evaluated in round-to-nearest and then widened outward by one
// ulp per endpoint.  IEEE basic ops (+,-,*,/,sqrt) are correctly rounded, so
// the nearest result is within half an ulp of the exact value and the
// widened pair encloses it.  Infinite endpoints denote unbounded-but-finite
// quantities (an enclosure that escaped above any double), never attained
// infinities; hence the 0 * inf = 0 convention in mul() is sound.

inline double step_down(double x) {
    return std::nextafter(x, -std::numeric_limits<double>::infinity());
}
inline double step_up(double x) {
    return std::nextafter(x, std::numeric_limits<double>::infinity());
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    explicit Interval(double x) : lo(x), hi(x) {}
    Interval(double l, double h) : lo(l), hi(h) {}

    static Interval exact(double x) { return Interval(x, x); }
    static Interval whole() {
        return Interval(-std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity());
    }

    bool valid() const { return lo <= hi; }           // NaN-free and ordered
    bool is_point() const { return lo == hi; }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
    bool strictly_positive() const { return lo > 0.0; }
    bool strictly_negative() const { return hi < 0.0; }

    double width() const { return step_up(hi - lo); }
    double mid() const {
        if (lo == hi) return lo;
        double m = 0.5 * (lo + hi);
        if (!std::isfinite(m)) m = 0.5 * lo + 0.5 * hi;
        if (m < lo) m = lo;
        if (m > hi) m = hi;
        return m;
    }
    double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
    // upper bound on max_{x in this} |x - mid()|
    double rad_from(double m) const {
        return std::max(step_up(hi - m), step_up(m - lo));
    }
};

inline Interval hull(const Interval& a, const Interval& b) {
    return Interval(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}
inline Interval intersect(const Interval& a, const Interval& b) {
    return Interval(std::max(a.lo, b.lo), std::min(a.hi, b.hi)); // may be invalid()
}

inline Interval operator-(const Interval& a) { return Interval(-a.hi, -a.lo); }

inline Interval operator+(const Interval& a, const Interval& b) {
    return Interval(step_down(a.lo + b.lo), step_up(a.hi + b.hi));
}
inline Interval operator-(const Interval& a, const Interval& b) {
    return Interval(step_down(a.lo - b.hi), step_up(a.hi - b.lo));
}

namespace detail {
// endpoint product with the 0 * inf = 0 convention
inline double mul_ep(double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
}
} // namespace detail

inline Interval operator*(const Interval& a, const Interval& b) {
    const double p1 = detail::mul_ep(a.lo, b.lo);
    const double p2 = detail::mul_ep(a.lo, b.hi);
    const double p3 = detail::mul_ep(a.hi, b.lo);
    const double p4 = detail::mul_ep(a.hi, b.hi);
    const double lo = std::min(std::min(p1, p2), std::min(p3, p4));
    const double hi = std::max(std::max(p1, p2), std::max(p3, p4));
    return Interval(step_down(lo), step_up(hi));
}

inline Interval operator/(const Interval& a, const Interval& b) {
    if (b.lo <= 0.0 && b.hi >= 0.0)
        throw DomainError("interval division by an interval containing zero");
    auto div_ep = [](double x, double y) {
        if (x == 0.0) return 0.0;
        if (std::isinf(y)) return x > 0.0 == y > 0.0 ? 0.0 : -0.0;
        return x / y;
    };
    const double q1 = div_ep(a.lo, b.lo);
    const double q2 = div_ep(a.lo, b.hi);
    const double q3 = div_ep(a.hi, b.lo);
    const double q4 = div_ep(a.hi, b.hi);
    const double lo = std::min(std::min(q1, q2), std::min(q3, q4));
    const double hi = std::max(std::max(q1, q2), std::max(q3, q4));
    return Interval(step_down(lo), step_up(hi));
}

inline Interval abs(const Interval& a) {
    if (a.lo >= 0.0) return a;
    if (a.hi <= 0.0) return Interval(-a.hi, -a.lo);
    return Interval(0.0, std::max(-a.lo, a.hi));
}

inline Interval sqr(const Interval& a) {
    const Interval m = abs(a);
    return Interval(step_down(detail::mul_ep(m.lo, m.lo)),
                    step_up(detail::mul_ep(m.hi, m.hi)));
}

inline Interval sqrt(const Interval& a) {
    if (a.lo < 0.0)
        throw DomainError("interval sqrt of a partially negative interval");
    return Interval(std::max(0.0, step_down(std::sqrt(a.lo))), step_up(std::sqrt(a.hi)));
}

// x^n by binary exponentiation; even powers go through sqr so straddling
// inputs keep the sign information.
Interval pow_int(const Interval& a, long long n);

// Certified enclosures of exp and log (argument reduction + interval
// Taylor/atanh series, see interval.cpp).
Interval exp(const Interval& a);
Interval log(const Interval& a);

// x^(p/q) for x.lo >= 0 (any sign of p); q > 0.  Integer exponents use
// pow_int, everything else exp((p/q) log x) on the endpoints.  A zero lower
// endpoint yields 0 (p>0) or an infinite upper endpoint (p<0).
Interval pow_rational(const Interval& a, long long p, long long q);

// Interval containing the exact decimal denoted by the literal (strtod is
// correctly rounded, so a one-ulp widening brackets the exact rational).
Interval interval_from_decimal(const std::string& literal);

// Exact-rational enclosure p/q.
Interval interval_from_ratio(long long p, long long q);

inline std::string to_string(const Interval& a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "[%.17g, %.17g]", a.lo, a.hi);
    return buf;
}

} // namespace ulamcert
