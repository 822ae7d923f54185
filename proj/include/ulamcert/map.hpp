#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ulamcert/expr.hpp"

namespace ulamcert {

enum class Monotonicity { increasing, decreasing };

// Detected branch shape c0 + c1*|x - s|^(p/q) with 0 < p/q < 1.  Derivative
// and distortion then have monotone closed forms in u = |x - s|:
//   |T'| = |c1| r u^(r-1),   |T''/T'^2| = K u^(-r),  K = (1-r)/(|c1| r),
// and the distortion integral has the antiderivative K u^(1-r)/(1-r).
// These survive arbitrarily close to u = 0, where raw jets are vacuous.
struct PowerForm {
    Interval c0, c1;
    Interval s;        // singular abscissa
    long long p, q;    // exponent p/q, gcd-reduced, 0 < p/q < 1
};

struct BaseBranch {
    Interval domain_lo, domain_hi; // cut point enclosures
    ExprPtr formula;
    Monotonicity monot = Monotonicity::increasing;
    Interval image;
    Interval abs_deriv;      // enclosure of |T'| on the domain; hi may be +inf
    Interval distortion_sup; // upper part is sup |T''/T'^2|; hi may be +inf
    std::optional<PowerForm> power;
};

// A branch of T^power: its domain and the base branches it passes through,
// first applied first.  Base maps have chains of length one.
struct Branch {
    Interval domain_lo, domain_hi;
    std::vector<int> chain;
    Monotonicity monot = Monotonicity::increasing;
};

struct PiecewiseMap {
    std::vector<BaseBranch> base;
    std::vector<Branch> branches;
    std::vector<Interval> cut_points; // d_1 = 0, ..., d_m = 1 of T^power
    int power = 1;
    Interval inf_abs_deriv; // enclosure of inf |(T^power)'|
    Interval min_gap;       // enclosure of min (d_{i+1} - d_i)
    bool unbounded_derivative = false;
};

struct Hole {
    Interval interval;
};

// One branch of input: endpoints either explicit enclosures or 'auto'
// (solved from the formula crossing 0 or 1, for mod-1 style maps whose cut
// abscissae are implicit).
struct BranchSpec {
    Interval domain_lo, domain_hi;
    bool lo_auto = false;
    bool hi_auto = false;
    std::string formula;
};

struct MapTolerances {
    double enclosure_width = 0x1p-40; // target width for cut/preimage enclosures
    int max_subdiv_depth = 56;
};

PiecewiseMap build_map(const std::vector<BranchSpec>& specs,
                       const MapTolerances& tol = {});

// Branch list for a*x mod 1 with rational slope a = num/den > 1.
std::vector<BranchSpec> linear_mod1_branches(long long num, long long den);

PiecewiseMap iterate_map(const PiecewiseMap& m, int n,
                         const MapTolerances& tol = {});

// Enclosure of {x in branch : T^power(x) in target}; nullopt when the target
// misses the branch image.
std::optional<Interval> branch_preimage(const PiecewiseMap& m, const Branch& b,
                                        const Interval& target,
                                        const MapTolerances& tol = {});

// Endpoint-resolved variant for Ulam assembly: enclosures of the two
// preimage endpoints, ordered along the branch domain.
struct PreimageSlice {
    Interval left, right;
};
std::optional<PreimageSlice> branch_preimage_slice(const PiecewiseMap& m, const Branch& b,
                                                   const Interval& target,
                                                   const MapTolerances& tol = {});

// Value of T^power on an interval through a branch's chain.
Interval chain_value(const PiecewiseMap& m, const Branch& b, const Interval& x);
// Enclosure of |(T^power)'| on a cell of the branch.
Interval chain_abs_deriv(const PiecewiseMap& m, const Branch& b, const Interval& x);
// Enclosure of the distortion |F''/F'^2| of F = T^power on a cell.
Interval chain_distortion(const PiecewiseMap& m, const Branch& b, const Interval& x);

struct DistortionExcess {
    Interval integral;   // enclosure of the distortion integral over I_l
    Interval sup_below;  // upper part bounds sup of the distortion on the complement
};
DistortionExcess distortion_excess_integral(const PiecewiseMap& m, double l,
                                            const MapTolerances& tol = {});

// Enclosure of sup |F''/F'^2| over all branches of F = T^power.
Interval map_distortion_sup(const PiecewiseMap& m, const MapTolerances& tol = {});

} // namespace ulamcert
