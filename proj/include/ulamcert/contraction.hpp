#pragma once

#include "ulamcert/ulam.hpp"

namespace ulamcert {

// Cell-average vector plus an L1 bound on the distance to the true vector it
// stands for.  err_l1 only grows; it is reported separately and added at the
// final norm evaluation, never folded into the values.
struct RigorousVector {
    std::vector<double> values;
    double err_l1 = 0.0;
};

RigorousVector rigorous_matvec(const UlamMatrix& u, const RigorousVector& v);

enum class ContractionSpace { zero_average, whole };

struct ContractionTracePoint {
    int n;
    double lambda2_upper;
    double err_component;
};

struct ContractionCertificate {
    int n1 = 0;
    Interval lambda2{0.0, 0.0}; // certified upper bound in .hi
    ContractionSpace space = ContractionSpace::zero_average;
    long long basis_count = 0;
    bool achieved = false;
    std::vector<ContractionTracePoint> trace; // full search trace, n = 1..n_max
};

struct NoContraction : std::runtime_error {
    explicit NoContraction(ContractionCertificate b)
        : std::runtime_error("contraction target not reached by n_max; best lambda2 = " +
                             std::to_string(b.lambda2.hi) + " at n = " + std::to_string(b.n1)),
          best(std::move(b)) {}
    ContractionCertificate best;
};

// Certified sup over the unit ball of the zero-average subspace: extreme
// points are (f_i - f_j)/2 with f_i the normalized cell indicators, bounded
// through a reference vector w by the triangle inequality, so the bound is
// max_i (||L_delta^n f_i - w||_1 + err).  Throws NoContraction when the
// target is not reached by n_max.
ContractionCertificate estimate_lambda2_mixing(const UlamMatrix& u, double target, int n_max,
                                               int threads = 1);

// Whole-space variant for holed matrices: extreme points are +-f_i, so the
// bound is max_i (||L_delta^n f_i||_1 + err).
ContractionCertificate estimate_lambda2_escape(const UlamMatrix& u, double target, int n_max,
                                               int threads = 1);

// Floating-point fixed point of the midpoint matrix, mass-normalized;
// used as the reference vector and as the density seed.
std::vector<double> approx_fixed_point(const UlamMatrix& u, int threads = 1);

void export_trace_csv(const ContractionCertificate& c, std::ostream& os);

} // namespace ulamcert
