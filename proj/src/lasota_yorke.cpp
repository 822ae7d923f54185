#include "ulamcert/lasota_yorke.hpp"

namespace ulamcert {

namespace {
const Interval kOne(1.0, 1.0);
const Interval kTwo(2.0, 2.0);
} // namespace

OneStepLY ly_one_step(const PiecewiseMap& m) {
    if (m.unbounded_derivative)
        throw DomainError("one-step inequality needs bounded derivative enclosures");
    if (m.inf_abs_deriv.hi <= 2.0)
        throw ExpansionTooWeak("inf|T'| <= 2: iterate the map first");

    OneStepLY one;
    one.contraction = kTwo / m.inf_abs_deriv;
    const Interval dist = map_distortion_sup(m);
    one.affine_term = kTwo / m.min_gap + kTwo * Interval(0.0, dist.hi);
    return one;
}

LYCertificate ly_iterate(const OneStepLY& one) {
    if (one.contraction.hi >= 1.0)
        throw ExpansionTooWeak("one-step contraction is not below 1");
    LYCertificate c;
    c.A = kOne;
    c.lambda1 = one.contraction;
    c.B = one.affine_term / (kOne - one.contraction);
    c.provenance = LYProvenance::computed;
    return c;
}

LYCertificate ly_lorenz(const PiecewiseMap& m, double l, const MapTolerances& tol) {
    const DistortionExcess ex = distortion_excess_integral(m, l, tol);
    const Interval lambda1 = ex.integral / kTwo + kTwo / m.inf_abs_deriv;
    if (lambda1.hi >= 1.0)
        throw ExpansionTooWeak("lambda1 bound " + to_string(lambda1) +
                               " not below 1; raise l or iterate the map");
    LYCertificate c;
    c.A = kOne;
    c.lambda1 = lambda1;
    c.B = (kTwo / m.min_gap + Interval::exact(l)) / (kOne - lambda1);
    c.provenance = LYProvenance::computed;
    return c;
}

LYCertificate ly_hole(const OneStepLY& closed) {
    const Interval lam1 = kTwo * closed.contraction; // the 4 lambda
    if (lam1.hi >= 1.0)
        throw ExpansionTooWeak("4 lambda >= 1: the holed inequality is unusable "
                               "(iterating the closed map first is not valid here)");
    LYCertificate c;
    c.A = kOne;
    c.lambda1 = lam1;
    c.B = kTwo * closed.affine_term / (kOne - lam1);
    c.provenance = LYProvenance::computed;
    return c;
}

LYCertificate ly_user(const Interval& A, const Interval& lambda1, const Interval& B) {
    if (A.lo < 0.0 || B.lo < 0.0 || lambda1.lo < 0.0)
        throw ConfigError("user-supplied LY coefficients must be nonnegative");
    LYCertificate c;
    c.A = A;
    c.lambda1 = lambda1;
    c.B = B;
    c.provenance = LYProvenance::user_supplied;
    return c;
}

} // namespace ulamcert
