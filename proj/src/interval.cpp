#include "ulamcert/interval.hpp"

#include <cfloat>
#include <cstdlib>

namespace ulamcert {

namespace {

// 2-ulp bracket around the nearest double to ln 2; safe whichever side the
// exact value falls on.
const Interval kLn2(step_down(0x1.62e42fefa39efp-1), step_up(0x1.62e42fefa39efp-1));

constexpr double kInf = std::numeric_limits<double>::infinity();

// Monotone nonnegative integer power, endpoints by interval binary
// exponentiation of point intervals.
Interval pow_nonneg(const Interval& m, unsigned long long n) {
    auto point_pow = [](double x, unsigned long long k) {
        Interval r(1.0, 1.0);
        Interval b = Interval::exact(x);
        while (k) {
            if (k & 1ULL) r = r * b;
            b = sqr(b);
            k >>= 1ULL;
        }
        return r;
    };
    double lo = m.lo == 0.0 ? 0.0 : std::max(0.0, point_pow(m.lo, n).lo);
    double hi = std::isinf(m.hi) ? kInf : point_pow(m.hi, n).hi;
    return Interval(lo, hi);
}

// exp on a point argument, as an enclosure.
Interval exp_core(double x) {
    if (std::isinf(x)) return x > 0 ? Interval(8e307, kInf) : Interval(0.0, DBL_TRUE_MIN);
    if (x > 709.8) return Interval(8e307, kInf);
    if (x < -745.2) return Interval(0.0, DBL_TRUE_MIN);

    const double k = std::nearbyint(x / 0.6931471805599453);
    const Interval r = Interval::exact(x) - Interval::exact(k) * kLn2; // |r| <= 0.3466

    Interval sum(1.0, 1.0), term(1.0, 1.0);
    constexpr int N = 16;
    for (int j = 1; j <= N; ++j) {
        term = term * r / Interval::exact(double(j));
        sum = sum + term;
    }
    // |R| <= |r|^(N+1)/(N+1)! * e^|r|, with e^0.35 < 1.42
    Interval rm = pow_nonneg(abs(r), N + 1);
    double fact = 1.0;
    for (int j = 2; j <= N + 1; ++j) fact *= j;
    const double rmag = (Interval(0.0, rm.hi) * Interval(0.0, 1.42) / Interval::exact(fact)).hi;
    sum = sum + Interval(-rmag, rmag);

    const int ki = int(k);
    double lo = step_down(std::ldexp(sum.lo, ki));
    double hi = step_up(std::ldexp(sum.hi, ki));
    return Interval(std::max(lo, 0.0), hi);
}

// log on a positive finite point argument.
Interval log_core(double x) {
    int e = 0;
    double m = std::frexp(x, &e); // m in [0.5, 1)
    if (m < 0.7071067811865476) {
        m *= 2.0;
        e -= 1;
    }
    const Interval mi = Interval::exact(m);
    const Interval t = (mi - Interval(1.0, 1.0)) / (mi + Interval(1.0, 1.0)); // |t| <= 0.1716
    const Interval u = sqr(t);

    Interval series(1.0, 1.0), pw(1.0, 1.0);
    constexpr int N = 10;
    for (int j = 1; j <= N; ++j) {
        pw = pw * u;
        series = series + pw / Interval::exact(double(2 * j + 1));
    }
    // positive remainder of the atanh series
    const Interval tail = pow_nonneg(u, N + 1) /
                          (Interval::exact(double(2 * N + 3)) * (Interval(1.0, 1.0) - Interval(0.0, u.hi)));
    series = series + Interval(0.0, tail.hi);

    return Interval::exact(double(e)) * kLn2 + Interval(2.0, 2.0) * t * series;
}

} // namespace

Interval pow_int(const Interval& a, long long n) {
    if (n < 0) {
        if (a.contains(0.0))
            throw DomainError("negative integer power of an interval containing zero");
        return Interval(1.0, 1.0) / pow_int(a, -n);
    }
    if (n == 0) return Interval(1.0, 1.0);
    if (n == 1) return a;
    const auto un = static_cast<unsigned long long>(n);
    if (n % 2 == 0) return pow_nonneg(abs(a), un);
    if (a.lo >= 0.0) return pow_nonneg(a, un);
    if (a.hi <= 0.0) return -pow_nonneg(-a, un);
    return hull(-pow_nonneg(Interval(0.0, -a.lo), un), pow_nonneg(Interval(0.0, a.hi), un));
}

Interval exp(const Interval& a) {
    return Interval(exp_core(a.lo).lo, exp_core(a.hi).hi);
}

Interval log(const Interval& a) {
    if (a.lo < 0.0 || a.hi <= 0.0)
        throw DomainError("interval log requires a positive argument");
    const double hi = std::isinf(a.hi) ? kInf : log_core(a.hi).hi;
    const double lo = a.lo == 0.0 ? -kInf : log_core(a.lo).lo;
    return Interval(lo, hi);
}

Interval pow_rational(const Interval& a, long long p, long long q) {
    if (q == 0) throw DomainError("power exponent with zero denominator");
    if (q < 0) {
        p = -p;
        q = -q;
    }
    if (p % q == 0) return pow_int(a, p / q);
    if (a.lo < 0.0)
        throw DomainError("fractional power of a partially negative interval");

    const Interval r = interval_from_ratio(p, q);
    auto point_pow = [&](double x) { return exp(r * log(Interval::exact(x))); };

    if (p > 0) { // increasing in the base
        if (a.hi == 0.0) return Interval(0.0, 0.0);
        const double lo = a.lo == 0.0 ? 0.0 : std::max(0.0, point_pow(a.lo).lo);
        const double hi = std::isinf(a.hi) ? kInf : point_pow(a.hi).hi;
        return Interval(lo, hi);
    }
    // decreasing in the base
    if (a.hi == 0.0)
        throw DomainError("negative power of the zero interval");
    const double lo = std::isinf(a.hi) ? 0.0 : std::max(0.0, point_pow(a.hi).lo);
    const double hi = a.lo == 0.0 ? kInf : point_pow(a.lo).hi;
    return Interval(lo, hi);
}

Interval interval_from_decimal(const std::string& literal) {
    char* end = nullptr;
    const double v = std::strtod(literal.c_str(), &end);
    if (end == literal.c_str() || *end != '\0')
        throw DomainError("malformed numeric literal '" + literal + "'");
    return Interval(step_down(v), step_up(v));
}

Interval interval_from_ratio(long long p, long long q) {
    if (q == 0) throw DomainError("rational with zero denominator");
    // Dyadic ratios are exact in binary; grid coordinates rely on this.
    if (q > 0 && (q & (q - 1)) == 0 && p > -(1LL << 52) && p < (1LL << 52))
        return Interval::exact(double(p) / double(q));
    return Interval::exact(double(p)) / Interval::exact(double(q));
}

} // namespace ulamcert
