#pragma once

#include "ulamcert/map.hpp"

namespace ulamcert {

enum class LYProvenance { computed, user_supplied };

// Coefficients of ||L^n f||_s <= A lambda1^n ||f||_s + B ||f||_w, strong norm
// the test-function BV norm, weak norm L^1.
struct LYCertificate {
    Interval A;
    Interval lambda1;
    Interval B;
    LYProvenance provenance = LYProvenance::computed;
};

// One-step inequality ||L g|| <= contraction * ||g|| + affine_term * |g|_w.
struct OneStepLY {
    Interval contraction; // the 2 lambda
    Interval affine_term; // the B'
};

// contraction = 2/inf|T'|, affine = 2/min_gap + 2 sup|T''/T'^2|.
OneStepLY ly_one_step(const PiecewiseMap& m);

// Collapse a one-step inequality to uniform-in-n coefficients:
// A = 1, lambda1 = contraction, B = affine/(1 - contraction).
LYCertificate ly_iterate(const OneStepLY& one);

// Unbounded-derivative route: lambda1 <= (1/2) int_{I_l} |T''/T'^2| + 2/inf|T'|,
// B <= (2/min_gap + l)/(1 - lambda1).
LYCertificate ly_lorenz(const PiecewiseMap& m, double l, const MapTolerances& tol = {});

// Punch a hole into a closed one-step inequality: (2lam, B') -> (4lam, 2B'),
// then collapse as in ly_iterate.
LYCertificate ly_hole(const OneStepLY& closed);

LYCertificate ly_user(const Interval& A, const Interval& lambda1, const Interval& B);

} // namespace ulamcert
