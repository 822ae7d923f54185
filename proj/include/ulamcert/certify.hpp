#pragma once

#include "ulamcert/contraction.hpp"
#include "ulamcert/lasota_yorke.hpp"
#include "ulamcert/ulam.hpp"

namespace ulamcert {

// M = [ A lambda1^n1   B ; delta C   delta n1 D + lambda2 ]
struct BoundMatrix {
    Interval m11, m12, m21, m22;
};

enum class CertMode { mixing, escape };

BoundMatrix assemble_M(const LYCertificate& ly, const ApproxCoefficients& ac,
                       const ContractionCertificate& cc, const Interval& delta);

// Closed-form leading eigenvalue of the nonnegative 2x2 matrix.
Interval spectral_radius_rho(const BoundMatrix& M);

// Left eigenvector of M for rho, normalized to a + b = 1.
std::pair<Interval, Interval> left_eigen_ab(const BoundMatrix& M, const Interval& rho);

struct PowerTableRow {
    long long h; // i * n1 applications of L
    Interval strong_c1, strong_c2; // ||L^h g||_s <= c1 ||g||_s + c2 ||g||_w
    Interval weak_c1, weak_c2;     // ||L^h g||_w <= c1 ||g||_s + c2 ||g||_w
};

struct DecayCertificate {
    BoundMatrix M;
    Interval rho, a, b;
    int n1 = 0;
    CertMode mode = CertMode::mixing;
    bool conclusive = false;    // rho.hi < 1
    Interval strong_const;      // A/a + B/b
    Interval weak_const;        // B/b
};

DecayCertificate make_decay_certificate(const LYCertificate& ly, const ApproxCoefficients& ac,
                                        const ContractionCertificate& cc, const Interval& delta,
                                        CertMode mode);

// Coefficient-and-rate pair (strong, weak) bounding ||L^k g|| by
// const * rho^floor(k/n1) * ||g||_s.
std::pair<Interval, Interval> decay_bounds(const DecayCertificate& dc, long long k);

// Rows of M^i applied to (||g||_s, ||g||_w); multiples must be positive and
// ascending.
std::vector<PowerTableRow> power_table(const BoundMatrix& M, int n1,
                                       const std::vector<long long>& multiples);

// Certified lower bound on the exponential escape rate per application of
// L_H: -log(rho)/n1, zero when inconclusive.
Interval escape_rate_bound(const DecayCertificate& dc);

struct DensityResult {
    std::vector<double> f_delta;
    double fix_residual = 0.0;  // certified ||L_delta f - f||_1
    double mass_defect = 0.0;   // certified |mass(f) - 1|
    double bv_norm = 0.0;       // certified upper bound on ||f_delta||_BV
    Interval l1_error;          // certified ||f - f_delta||_1 in .hi
    long long chosen_N = 0;     // horizon minimizing the bound
    double term_fix = 0.0, term_disc = 0.0, term_decay = 0.0; // audit breakdown
};

// Approximate invariant density with a certified L1 error bound, composed
// from the near-fixity of the power-iterated vector, the discretization
// inequality, and the certified decay of zero-average measures.
DensityResult invariant_density_with_error(const UlamMatrix& u, const DecayCertificate& dc,
                                           const LYCertificate& ly, const ApproxCoefficients& ac,
                                           int max_multiples = 80, int threads = 1);

} // namespace ulamcert
