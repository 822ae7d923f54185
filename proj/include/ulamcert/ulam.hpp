#pragma once

#include <iosfwd>
#include <vector>

#include "ulamcert/lasota_yorke.hpp"
#include "ulamcert/map.hpp"

namespace ulamcert {

// Uniform partition of [0,1] into k cells I_i = [(i-1)/k, i/k], 1-based in
// all exports and error messages.
struct Partition {
    long long k = 0;
    Interval delta; // 1/k
};

// Certified enclosure of the Ulam matrix: entry (j,i) is the mass cell i
// sends to cell j, column-stochastic for closed systems.  Densities are
// column vectors of per-cell averages and the matrix acts by left
// multiplication.
struct UlamMatrix {
    Partition partition;
    // column-major enclosures (0-based internally)
    std::vector<int> col_ptr;       // k+1
    std::vector<int> row_idx;
    std::vector<Interval> entries;
    std::vector<int> hole_rows;     // masked rows, 0-based, sorted; empty if closed
    bool stochastic = true;

    // derived data for the rigorous matvec
    std::vector<double> mid;          // entry midpoints, same layout
    std::vector<double> col_rad_sum;  // per column: sum of entry radii (upper bd)
    std::vector<double> col_sum_hi;   // per column: sum of entry upper bounds
    double max_col_rad_sum = 0.0;
    double max_col_sum_hi = 0.0;
    int max_col_nnz = 0;

    // row-major midpoint copy; row sums are thread-count independent
    std::vector<int> row_ptr, col_idx;
    std::vector<double> row_mid;

    long long k() const { return partition.k; }
};

struct ApproxCoefficients {
    Interval C, D;
};

UlamMatrix build_ulam(const PiecewiseMap& m, long long k, const MapTolerances& tol = {});

// Zero the rows fully inside the hole (mass landing there is destroyed after
// one application of L).  Strict grid alignment: endpoints must sit on grid
// lines.
UlamMatrix apply_hole_mask(const UlamMatrix& u, const Hole& h);

// C = (A lambda1 + 1) A / (1 - lambda1), D = B (A lambda1 + 2).
ApproxCoefficients approx_coefficients(const LYCertificate& ly);

// "ulam k=<k> hole=<lo,hi|none>" then one line "j i lo hi" per nonzero,
// round-trip exact decimals, 1-based indices.
void export_matrix(const UlamMatrix& u, std::ostream& os);

// Norms of the piecewise-constant density representation.
double weak_norm_l1(const UlamMatrix& u, const std::vector<double>& v);   // delta * sum |v_i|
double strong_norm_bv(const std::vector<double>& v); // |v_1| + sum |v_{i+1}-v_i| + |v_k|

} // namespace ulamcert
