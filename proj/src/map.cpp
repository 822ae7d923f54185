#include "ulamcert/map.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace ulamcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Interval clamp_nonneg(const Interval& a) {
    return Interval(std::max(a.lo, 0.0), std::max(a.hi, 0.0));
}

// 1/y for y with a definite sign; infinite endpoints map to 0.
Interval recip(const Interval& y) {
    if (y.lo <= 0.0 && y.hi >= 0.0)
        throw DomainError("reciprocal of an interval containing zero");
    auto r = [](double v) { return std::isinf(v) ? 0.0 : v; };
    if (y.lo > 0.0)
        return Interval(std::max(0.0, step_down(r(1.0 / y.hi))), step_up(1.0 / y.lo));
    return Interval(step_down(1.0 / y.hi), std::min(0.0, step_up(r(1.0 / y.lo))));
}

bool cell_atomic(const Interval& x) {
    const double m = x.mid();
    return !(m > x.lo && m < x.hi);
}

// ---- power-form detection ------------------------------------------------

using Rational = std::pair<long long, long long>;

// slope/intercept of an affine-in-x subexpression, exact rationals
std::optional<std::pair<Rational, Rational>> fold_affine(const ExprPtr& e) {
    if (auto c = fold_rational(e)) return std::make_pair(Rational{0, 1}, *c);
    auto combine = [](Rational a, Rational b, int sgn) -> std::optional<Rational> {
        const __int128 num = __int128(a.first) * b.second + __int128(sgn) * b.first * a.second;
        const __int128 den = __int128(a.second) * b.second;
        if (num > INT64_MAX / 4 || num < INT64_MIN / 4 || den > INT64_MAX / 4) return std::nullopt;
        return Rational{static_cast<long long>(num), static_cast<long long>(den)};
    };
    switch (e->kind) {
        case Expr::Kind::var: return std::make_pair(Rational{1, 1}, Rational{0, 1});
        case Expr::Kind::neg: {
            auto a = fold_affine(e->a);
            if (!a) return std::nullopt;
            return std::make_pair(Rational{-a->first.first, a->first.second},
                                  Rational{-a->second.first, a->second.second});
        }
        case Expr::Kind::add:
        case Expr::Kind::sub: {
            auto a = fold_affine(e->a), b = fold_affine(e->b);
            if (!a || !b) return std::nullopt;
            const int s = e->kind == Expr::Kind::add ? 1 : -1;
            auto slope = combine(a->first, b->first, s);
            auto icpt = combine(a->second, b->second, s);
            if (!slope || !icpt) return std::nullopt;
            return std::make_pair(*slope, *icpt);
        }
        case Expr::Kind::mul: {
            auto ca = fold_rational(e->a);
            auto fb = ca ? fold_affine(e->b) : std::nullopt;
            if (!ca || !fb) {
                ca = fold_rational(e->b);
                fb = ca ? fold_affine(e->a) : std::nullopt;
            }
            if (!ca || !fb) return std::nullopt;
            auto scale = [&](Rational r) -> std::optional<Rational> {
                const __int128 num = __int128(r.first) * ca->first;
                const __int128 den = __int128(r.second) * ca->second;
                if (num > INT64_MAX / 4 || num < INT64_MIN / 4 || den > INT64_MAX / 4)
                    return std::nullopt;
                return Rational{static_cast<long long>(num), static_cast<long long>(den)};
            };
            auto slope = scale(fb->first), icpt = scale(fb->second);
            if (!slope || !icpt) return std::nullopt;
            return std::make_pair(*slope, *icpt);
        }
        default: return std::nullopt;
    }
}

// e == alpha + beta * |slope*x + icpt|^(p/q) with 0 < p/q < 1?
std::optional<PowerForm> detect_power_form(const ExprPtr& e) {
    struct Lin {
        Interval alpha{0.0, 0.0}, beta{1.0, 1.0};
        ExprPtr pow_node;
    };
    // walk down, peeling affine wrappers around exactly one pow(abs(...)) node
    std::function<std::optional<Lin>(const ExprPtr&)> peel = [&](const ExprPtr& n) -> std::optional<Lin> {
        switch (n->kind) {
            case Expr::Kind::pow:
                if (n->a->kind == Expr::Kind::abs) return Lin{Interval(0.0, 0.0), Interval(1.0, 1.0), n};
                return std::nullopt;
            case Expr::Kind::neg: {
                auto in = peel(n->a);
                if (!in) return std::nullopt;
                return Lin{-in->alpha, -in->beta, in->pow_node};
            }
            case Expr::Kind::add:
            case Expr::Kind::sub: {
                const int s = n->kind == Expr::Kind::add ? 1 : -1;
                if (auto c = fold_rational(n->a)) {
                    auto in = peel(n->b);
                    if (!in) return std::nullopt;
                    const Interval ci = interval_from_ratio(c->first, c->second);
                    const Interval sg(double(s), double(s));
                    return Lin{ci + sg * in->alpha, sg * in->beta, in->pow_node};
                }
                if (auto c = fold_rational(n->b)) {
                    auto in = peel(n->a);
                    if (!in) return std::nullopt;
                    const Interval ci = interval_from_ratio(c->first, c->second);
                    const Interval sg(double(s), double(s));
                    return Lin{in->alpha + sg * ci, in->beta, in->pow_node};
                }
                return std::nullopt;
            }
            case Expr::Kind::mul: {
                auto c = fold_rational(n->a);
                ExprPtr other = n->b;
                if (!c) {
                    c = fold_rational(n->b);
                    other = n->a;
                }
                if (!c) return std::nullopt;
                auto in = peel(other);
                if (!in) return std::nullopt;
                const Interval ci = interval_from_ratio(c->first, c->second);
                return Lin{ci * in->alpha, ci * in->beta, in->pow_node};
            }
            default: return std::nullopt;
        }
    };

    auto lin = peel(e);
    if (!lin) return std::nullopt;
    const ExprPtr& pw = lin->pow_node;
    const long long p = pw->pow_p, q = pw->pow_q;
    if (p <= 0 || p >= q) return std::nullopt; // only the unbounded-derivative shape
    auto aff = fold_affine(pw->a->a);
    if (!aff || aff->first.first == 0) return std::nullopt;
    const Rational slope = aff->first, icpt = aff->second;
    // |a x + b|^r = |a|^r |x - s|^r, s = -b/a
    const __int128 sn = -__int128(icpt.first) * slope.second;
    const __int128 sd = __int128(icpt.second) * slope.first;
    if (sn > INT64_MAX / 2 || sn < INT64_MIN / 2 || sd > INT64_MAX / 2 || sd < INT64_MIN / 2)
        return std::nullopt;
    long long s_num = static_cast<long long>(sn), s_den = static_cast<long long>(sd);
    if (s_den < 0) {
        s_num = -s_num;
        s_den = -s_den;
    }
    PowerForm f;
    f.s = interval_from_ratio(s_num, s_den);
    const Interval slope_mag = abs(interval_from_ratio(slope.first, slope.second));
    f.c1 = lin->beta * pow_rational(slope_mag, p, q);
    f.c0 = lin->alpha;
    f.p = p;
    f.q = q;
    if (f.c1.contains(0.0)) return std::nullopt;
    return f;
}

// ---- base branch local evaluators -----------------------------------------

// distance to the singular abscissa on the branch's side, clamped at zero
Interval power_u(const PowerForm& f, bool left_of_s, const Interval& y) {
    const Interval u = left_of_s ? f.s - y : y - f.s;
    return clamp_nonneg(u);
}

bool branch_left_of_s(const BaseBranch& bb) {
    return bb.domain_lo.mid() + bb.domain_hi.mid() < 2.0 * bb.power->s.mid();
}

Interval base_signed_deriv(const BaseBranch& bb, const Interval& y) {
    if (bb.power) {
        const PowerForm& f = *bb.power;
        const bool left = branch_left_of_s(bb);
        const Interval u = power_u(f, left, y);
        const Interval mag =
            abs(f.c1) * interval_from_ratio(f.p, f.q) * pow_rational(u, f.p - f.q, f.q);
        const bool pos = (f.c1.lo > 0.0) != left;
        return pos ? mag : -mag;
    }
    return eval_jet(bb.formula, y, JetMode::hull).d1;
}

Interval base_abs_deriv(const BaseBranch& bb, const Interval& y) {
    return abs(base_signed_deriv(bb, y));
}

// T''/T'^2 with sign
Interval base_signed_distortion(const BaseBranch& bb, const Interval& y) {
    if (bb.power) {
        const PowerForm& f = *bb.power;
        const Interval u = power_u(f, branch_left_of_s(bb), y);
        // (r-1)/(c1 r) u^(-r) = (p-q)/(c1 p) u^(-p/q)
        const Interval K = interval_from_ratio(f.p - f.q, 1) / (f.c1 * interval_from_ratio(f.p, 1));
        return K * pow_rational(u, -f.p, f.q);
    }
    const Jet2 j = eval_jet(bb.formula, y, JetMode::hull);
    return j.d2 / sqr(j.d1);
}

// enclosure of the signed integral of T''/T'^2 over y
Interval base_signed_distortion_integral(const BaseBranch& bb, const Interval& y) {
    if (bb.power) {
        const PowerForm& f = *bb.power;
        // antiderivative of K u^(-r) in u is sign(K) u^(1-r)/(|c1| r)
        const Interval denom = abs(f.c1) * interval_from_ratio(f.p, f.q);
        auto G = [&](const Interval& u) {
            return pow_rational(clamp_nonneg(u), f.q - f.p, f.q) / denom;
        };
        const Interval a = Interval::exact(y.lo), b = Interval::exact(y.hi);
        const Interval right = clamp_nonneg(G(b - f.s) - G(a - f.s));
        const Interval left = clamp_nonneg(G(f.s - a) - G(f.s - b));
        const Interval mag = right + left;
        return f.c1.lo > 0.0 ? -mag : mag; // sign of (r-1)/c1
    }
    const Interval w(std::max(0.0, step_down(y.hi - y.lo)), step_up(y.hi - y.lo));
    return w * base_signed_distortion(bb, y);
}

// ---- chain evaluation ------------------------------------------------------

struct ChainLevels {
    std::vector<Interval> y;          // y[0] = x, y[j+1] = T(y[j])
    std::vector<Interval> sderiv;     // signed T' enclosure at y[j]
};

ChainLevels chain_levels(const PiecewiseMap& m, const Branch& b, const Interval& x,
                         bool with_deriv) {
    ChainLevels out;
    out.y.reserve(b.chain.size() + 1);
    out.y.push_back(x);
    if (with_deriv) out.sderiv.reserve(b.chain.size());
    Interval cur = x;
    for (int idx : b.chain) {
        const BaseBranch& bb = m.base[static_cast<std::size_t>(idx)];
        if (with_deriv) out.sderiv.push_back(base_signed_deriv(bb, cur));
        cur = eval_interval(bb.formula, cur);
        out.y.push_back(cur);
    }
    return out;
}

} // namespace

Interval chain_value(const PiecewiseMap& m, const Branch& b, const Interval& x) {
    Interval cur = x;
    for (int idx : b.chain) cur = eval_interval(m.base[static_cast<std::size_t>(idx)].formula, cur);
    return cur;
}

Interval chain_abs_deriv(const PiecewiseMap& m, const Branch& b, const Interval& x) {
    Interval prod(1.0, 1.0);
    Interval cur = x;
    for (int idx : b.chain) {
        const BaseBranch& bb = m.base[static_cast<std::size_t>(idx)];
        prod = prod * base_abs_deriv(bb, cur);
        cur = eval_interval(bb.formula, cur);
    }
    return prod;
}

// |F''/F'^2| via the signed telescoping identity
//   F''/F'^2 (x) = sum_j (T''/T'^2)(y_j) * prod_{i>j} 1/T'(y_i).
Interval chain_distortion(const PiecewiseMap& m, const Branch& b, const Interval& x) {
    const std::size_t n = b.chain.size();
    ChainLevels lv = chain_levels(m, b, x, true);
    std::vector<Interval> inv(n);
    for (std::size_t j = 0; j < n; ++j) inv[j] = recip(lv.sderiv[j]);
    Interval total(0.0, 0.0);
    Interval suffix(1.0, 1.0); // prod_{i>j} 1/T'(y_i), built from the top
    for (std::size_t j = n; j-- > 0;) {
        const BaseBranch& bb = m.base[static_cast<std::size_t>(b.chain[j])];
        total = total + base_signed_distortion(bb, lv.y[j]) * suffix;
        suffix = suffix * inv[j];
    }
    return abs(total);
}

namespace {

// Enclosure of the integral of |F''/F'^2| over a cell: upper bound from the
// term-wise substitution y_j = T^j x, lower bound from the signed total.
Interval chain_distortion_integral(const PiecewiseMap& m, const Branch& b, const Interval& x) {
    const std::size_t n = b.chain.size();
    ChainLevels lv = chain_levels(m, b, x, true);
    std::vector<Interval> inv(n);
    for (std::size_t j = 0; j < n; ++j) inv[j] = recip(lv.sderiv[j]);

    std::vector<Interval> suffix(n + 1), prefix(n + 1);
    suffix[n] = Interval(1.0, 1.0);
    for (std::size_t j = n; j-- > 0;) suffix[j] = suffix[j + 1] * inv[j];
    prefix[0] = Interval(1.0, 1.0);
    for (std::size_t j = 0; j < n; ++j) prefix[j + 1] = prefix[j] * inv[j];

    double upper = 0.0;
    Interval signed_total(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const BaseBranch& bb = m.base[static_cast<std::size_t>(b.chain[j])];
        const Interval base_int = base_signed_distortion_integral(bb, lv.y[j]);
        // |prefix_{<j}| and |suffix_{>j}| scale the substituted base integral
        const Interval term = prefix[j] * suffix[j + 1] * base_int;
        upper = (Interval(0.0, upper) + abs(term)).hi;
        signed_total = signed_total + term;
    }
    double lower = 0.0;
    if (signed_total.lo > 0.0) lower = signed_total.lo;
    if (signed_total.hi < 0.0) lower = -signed_total.hi;
    return Interval(std::min(lower, upper), upper);
}

// ---- verified extrema by branch-and-bound ---------------------------------

template <typename F>
Interval verified_min(const Interval& domain, F&& f, int max_depth, double rel_tol) {
    double best_hi = kInf;
    double floor_lo = kInf;
    std::function<void(const Interval&, int)> rec = [&](const Interval& cell, int depth) {
        const Interval v = f(cell);
        best_hi = std::min(best_hi, v.hi);
        if (v.lo >= best_hi || depth >= max_depth || cell_atomic(cell) ||
            v.hi - v.lo <= rel_tol * std::max(1.0, std::fabs(v.lo))) {
            floor_lo = std::min(floor_lo, v.lo);
            return;
        }
        const double mid = cell.mid();
        rec(Interval(cell.lo, mid), depth + 1);
        rec(Interval(mid, cell.hi), depth + 1);
    };
    rec(domain, 0);
    return Interval(floor_lo, best_hi);
}

template <typename F>
Interval verified_max(const Interval& domain, F&& f, int max_depth, double rel_tol) {
    const Interval neg = verified_min(domain, [&](const Interval& c) { return -f(c); },
                                      max_depth, rel_tol);
    return -neg;
}

// ---- interval Newton on a monotone branch ---------------------------------

// Enclosure of the unique x in [bracket] with F(x) = target (target itself an
// enclosure); F given by the branch chain, monotone there.
Interval chain_root(const PiecewiseMap& m, const Branch& b, const Interval& target,
                    Interval X, const MapTolerances& tol) {
    for (int iter = 0; iter < 120 && X.width() > tol.enclosure_width && !cell_atomic(X); ++iter) {
        const double xm = X.mid();
        const Interval fm = chain_value(m, b, Interval::exact(xm)) - target;
        Interval d = chain_abs_deriv(m, b, X);
        if (b.monot == Monotonicity::decreasing) d = -d;
        bool progressed = false;
        if (!d.contains(0.0)) {
            const Interval N = Interval::exact(xm) - fm / d;
            const Interval Xn = intersect(N, X);
            if (Xn.valid() && Xn.width() < 0.8 * X.width()) {
                X = Xn;
                progressed = true;
            }
        }
        if (!progressed) {
            // bisection driven by the sign-certain direction of F
            double s = 0.0;
            if (d.lo > 0.0)
                s = 1.0;
            else if (d.hi < 0.0)
                s = -1.0;
            else
                break;
            const Interval g = Interval(s, s) * fm;
            if (g.hi < 0.0)
                X = Interval(xm, X.hi);
            else if (g.lo > 0.0)
                X = Interval(X.lo, xm);
            else
                break; // midpoint indistinguishable from the root at this width
        }
    }
    return X;
}

// Root of a bare expression on a bracket (used for auto cut points).
Interval expr_root(const ExprPtr& f, const Interval& target, Interval X,
                   const MapTolerances& tol) {
    PiecewiseMap shim;
    BaseBranch bb;
    bb.formula = f;
    bb.power = detect_power_form(f);
    bb.domain_lo = Interval::exact(X.lo);
    bb.domain_hi = Interval::exact(X.hi);
    shim.base.push_back(bb);
    Branch br;
    br.chain = {0};
    const Interval d1 = eval_jet(f, X, JetMode::hull).d1;
    br.monot = d1.lo >= 0.0 ? Monotonicity::increasing : Monotonicity::decreasing;
    return chain_root(shim, br, target, X, tol);
}

Monotonicity flip(Monotonicity a, Monotonicity b) {
    return a == b ? Monotonicity::increasing : Monotonicity::decreasing;
}

} // namespace

// ---- construction ----------------------------------------------------------

std::vector<BranchSpec> linear_mod1_branches(long long num, long long den) {
    if (den <= 0 || num <= den)
        throw ConfigError("linear_mod1 slope must be a rational > 1");
    const long long nb = (num + den - 1) / den; // ceil(num/den)
    std::vector<BranchSpec> specs;
    for (long long j = 0; j < nb; ++j) {
        BranchSpec s;
        s.domain_lo = j == 0 ? Interval(0.0, 0.0) : interval_from_ratio(j * den, num);
        s.domain_hi = j == nb - 1 ? Interval(1.0, 1.0) : interval_from_ratio((j + 1) * den, num);
        std::string f = den == 1 ? std::to_string(num) + "*x"
                                 : std::to_string(num) + "/" + std::to_string(den) + "*x";
        if (j > 0) f += " - " + std::to_string(j);
        s.formula = f;
        specs.push_back(std::move(s));
    }
    return specs;
}

PiecewiseMap build_map(const std::vector<BranchSpec>& specs, const MapTolerances& tol) {
    if (specs.empty()) throw ConfigError("map needs at least one branch");

    PiecewiseMap m;
    for (const auto& s : specs) {
        BaseBranch bb;
        bb.formula = parse_expr(s.formula);
        bb.power = detect_power_form(bb.formula);
        bb.domain_lo = s.domain_lo;
        bb.domain_hi = s.domain_hi;
        m.base.push_back(std::move(bb));
    }

    // resolve auto endpoints: the left branch's formula crosses 0 or 1 there
    for (std::size_t i = 0; i + 1 < specs.size(); ++i) {
        const bool auto_cut = specs[i].hi_auto || specs[i + 1].lo_auto;
        if (!auto_cut) {
            if (!specs[i].domain_hi.intersects(specs[i + 1].domain_lo))
                throw ConfigError("adjacent branch domains do not share a cut point");
            const Interval shared = intersect(specs[i].domain_hi, specs[i + 1].domain_lo);
            m.base[i].domain_hi = shared;
            m.base[i + 1].domain_lo = shared;
            continue;
        }
        if (specs[i].hi_auto && i > 0 && specs[i - 1].hi_auto)
            throw ConfigError("consecutive auto cut points are not supported");
        const Interval bracket(m.base[i].domain_lo.lo, specs[i + 1].domain_hi.hi);
        Interval cut;
        bool found = false;
        for (double t : {1.0, 0.0}) {
            const Interval ga = eval_interval(m.base[i].formula, Interval::exact(bracket.lo)) -
                                Interval::exact(t);
            const Interval gb = eval_interval(m.base[i].formula, Interval::exact(bracket.hi)) -
                                Interval::exact(t);
            if ((ga.hi < 0.0 && gb.lo > 0.0) || (ga.lo > 0.0 && gb.hi < 0.0)) {
                cut = expr_root(m.base[i].formula, Interval::exact(t), bracket, tol);
                found = true;
                break;
            }
        }
        if (!found)
            throw ConfigError("cannot infer auto cut point between branches " +
                              std::to_string(i + 1) + " and " + std::to_string(i + 2));
        m.base[i].domain_hi = cut;
        m.base[i + 1].domain_lo = cut;
    }

    if (!m.base.front().domain_lo.contains(0.0) || m.base.front().domain_lo.width() > 1e-9)
        throw ConfigError("first branch must start at 0");
    if (!m.base.back().domain_hi.contains(1.0) || m.base.back().domain_hi.width() > 1e-9)
        throw ConfigError("last branch must end at 1");

    for (std::size_t i = 0; i < m.base.size(); ++i) {
        BaseBranch& bb = m.base[i];
        if (bb.domain_lo.hi >= bb.domain_hi.lo)
            throw PrecisionError("cut point enclosures overlap at branch " + std::to_string(i + 1));
        const Interval dom(bb.domain_lo.lo, bb.domain_hi.hi);

        if (bb.power) {
            const Interval& s = bb.power->s;
            if (s.lo > bb.domain_lo.hi && s.hi < bb.domain_hi.lo)
                throw ConfigError("branch domain crosses the singular point of its formula");
        }

        // monotonicity and |T'| > 0
        const Interval sd = base_signed_deriv(bb, dom);
        if (sd.lo > 0.0) {
            bb.monot = Monotonicity::increasing;
        } else if (sd.hi < 0.0) {
            bb.monot = Monotonicity::decreasing;
        } else {
            // subdivide to pin the sign
            bool pos = true, neg = true;
            std::function<void(const Interval&, int)> sgn = [&](const Interval& c, int depth) {
                const Interval v = base_signed_deriv(bb, c);
                if (v.lo > 0.0) {
                    neg = false;
                    return;
                }
                if (v.hi < 0.0) {
                    pos = false;
                    return;
                }
                if (depth >= 14 || cell_atomic(c))
                    throw NotExpandingError("branch derivative enclosure contains zero");
                const double mid = c.mid();
                sgn(Interval(c.lo, mid), depth + 1);
                sgn(Interval(mid, c.hi), depth + 1);
            };
            sgn(dom, 0);
            if (pos == neg) throw NotExpandingError("branch derivative changes sign");
            bb.monot = pos ? Monotonicity::increasing : Monotonicity::decreasing;
        }

        Branch whole;
        whole.domain_lo = bb.domain_lo;
        whole.domain_hi = bb.domain_hi;
        whole.chain = {static_cast<int>(i)};
        whole.monot = bb.monot;

        // image from the monotone endpoints
        const Interval vlo = eval_interval(bb.formula, bb.domain_lo);
        const Interval vhi = eval_interval(bb.formula, bb.domain_hi);
        Interval img = hull(vlo, vhi);
        if (img.lo < -1e-9 || img.hi > 1.0 + 1e-9)
            throw ConfigError("branch " + std::to_string(i + 1) + " image " + to_string(img) +
                              " escapes [0,1]");
        bb.image = intersect(img, Interval(0.0, 1.0));

        bb.abs_deriv = verified_min(dom, [&](const Interval& c) { return base_abs_deriv(bb, c); },
                                    tol.max_subdiv_depth / 2, 1e-7);
        bb.abs_deriv.hi = verified_max(dom, [&](const Interval& c) { return base_abs_deriv(bb, c); },
                                       12, 1e-3).hi;
        if (bb.abs_deriv.lo <= 0.0 && !std::isinf(bb.abs_deriv.hi))
            throw NotExpandingError("branch |T'| lower bound is not positive");
        bb.distortion_sup =
            verified_max(dom, [&](const Interval& c) { return abs(base_signed_distortion(bb, c)); },
                         tol.max_subdiv_depth / 2, 1e-7);
        bb.distortion_sup.lo = 0.0;

        m.branches.push_back(std::move(whole));
    }

    m.cut_points.push_back(m.base.front().domain_lo);
    for (const auto& bb : m.base) m.cut_points.push_back(bb.domain_hi);

    m.inf_abs_deriv = Interval(kInf, kInf);
    Interval gap(kInf, kInf);
    for (std::size_t i = 0; i < m.base.size(); ++i) {
        const auto& bb = m.base[i];
        m.inf_abs_deriv =
            Interval(std::min(m.inf_abs_deriv.lo, bb.abs_deriv.lo),
                     std::min(m.inf_abs_deriv.hi, std::isinf(bb.abs_deriv.hi)
                                                       ? m.inf_abs_deriv.hi
                                                       : bb.abs_deriv.hi));
        const Interval g = bb.domain_hi - bb.domain_lo;
        gap = Interval(std::min(gap.lo, g.lo), std::min(gap.hi, g.hi));
        if (std::isinf(bb.abs_deriv.hi) || bb.distortion_sup.hi == kInf)
            m.unbounded_derivative = true;
    }
    m.min_gap = gap;
    return m;
}

PiecewiseMap iterate_map(const PiecewiseMap& m, int n, const MapTolerances& tol) {
    if (n < 1) throw ConfigError("iterate power must be >= 1");
    if (n == 1) return m;

    PiecewiseMap cur = m;
    const int target_power = m.power * n;
    while (cur.power < target_power) {
        PiecewiseMap next;
        next.base = cur.base;
        next.power = cur.power + 1;
        next.unbounded_derivative = cur.unbounded_derivative;

        // interior cut values of the base map
        std::vector<Interval> base_cuts;
        for (std::size_t t = 0; t + 1 < cur.base.size(); ++t)
            base_cuts.push_back(cur.base[t].domain_hi);

        for (const Branch& b : cur.branches) {
            const Interval vlo = chain_value(cur, b, b.domain_lo);
            const Interval vhi = chain_value(cur, b, b.domain_hi);
            const Interval ymin = b.monot == Monotonicity::increasing ? vlo : vhi;
            const Interval ymax = b.monot == Monotonicity::increasing ? vhi : vlo;

            std::vector<Interval> roots; // preimages of crossing cuts, in x order
            auto consider = [&](const Interval& d) {
                if (d.lo > ymin.hi && d.hi < ymax.lo) {
                    const Interval x =
                        chain_root(cur, b, d, Interval(b.domain_lo.lo, b.domain_hi.hi), tol);
                    roots.push_back(x);
                    return;
                }
                // Outside the image, or coinciding with a branch end up to
                // enclosure fuzz (Markov-style touching): no interior split.
                if (d.hi <= ymin.hi || d.lo >= ymax.lo) return;
                throw PrecisionError("cannot separate a pulled-back cut point from a branch end");
            };
            if (b.monot == Monotonicity::increasing)
                for (const auto& d : base_cuts) consider(d);
            else
                for (auto it = base_cuts.rbegin(); it != base_cuts.rend(); ++it) consider(*it);

            std::vector<Interval> pts;
            pts.push_back(b.domain_lo);
            for (const auto& r : roots) pts.push_back(r);
            pts.push_back(b.domain_hi);
            for (std::size_t j = 0; j + 1 < pts.size(); ++j)
                if (pts[j].hi >= pts[j + 1].lo)
                    throw PrecisionError("pulled-back cut point enclosures overlap");

            for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
                Branch piece;
                piece.domain_lo = pts[j];
                piece.domain_hi = pts[j + 1];
                piece.chain = b.chain;
                // locate the base branch receiving this piece
                const double probe = 0.5 * (pts[j].hi + pts[j + 1].lo);
                const Interval v = chain_value(cur, b, Interval::exact(probe));
                const double vm = v.mid();
                int k = -1;
                for (std::size_t t = 0; t < cur.base.size(); ++t) {
                    if (vm >= cur.base[t].domain_lo.lo && vm <= cur.base[t].domain_hi.hi) {
                        k = static_cast<int>(t);
                        break;
                    }
                }
                if (k < 0) throw PrecisionError("piece image escapes every base branch");
                piece.chain.push_back(k);
                piece.monot = flip(b.monot, cur.base[static_cast<std::size_t>(k)].monot);
                next.branches.push_back(std::move(piece));
            }
        }

        next.cut_points.push_back(next.branches.front().domain_lo);
        for (const auto& b : next.branches) next.cut_points.push_back(b.domain_hi);
        cur = std::move(next);
    }

    // map-level enclosures of the iterate
    Interval inf_d(kInf, kInf);
    Interval gap(kInf, kInf);
    for (const Branch& b : cur.branches) {
        const Interval dom(b.domain_lo.lo, b.domain_hi.hi);
        const Interval bi =
            verified_min(dom, [&](const Interval& c) { return chain_abs_deriv(cur, b, c); },
                         tol.max_subdiv_depth / 2, 1e-7);
        inf_d = Interval(std::min(inf_d.lo, bi.lo),
                         std::min(inf_d.hi, std::isinf(bi.hi) ? inf_d.hi : bi.hi));
        const Interval g = b.domain_hi - b.domain_lo;
        gap = Interval(std::min(gap.lo, g.lo), std::min(gap.hi, g.hi));
    }
    cur.inf_abs_deriv = inf_d;
    cur.min_gap = gap;

    if (!std::isinf(m.inf_abs_deriv.hi) && m.inf_abs_deriv.lo > 0.0) {
        const Interval expect = pow_int(m.inf_abs_deriv, cur.power / m.power);
        if (cur.inf_abs_deriv.hi < expect.lo)
            throw PrecisionError("iterate derivative bound below the chain-rule floor");
    }
    return cur;
}

// ---- preimages -------------------------------------------------------------

std::optional<PreimageSlice> branch_preimage_slice(const PiecewiseMap& m, const Branch& b,
                                                   const Interval& target,
                                                   const MapTolerances& tol) {
    const Interval vlo = chain_value(m, b, b.domain_lo);
    const Interval vhi = chain_value(m, b, b.domain_hi);
    const bool inc = b.monot == Monotonicity::increasing;
    const Interval ymin = inc ? vlo : vhi;
    const Interval ymax = inc ? vhi : vlo;
    if (target.hi < ymin.lo || target.lo > ymax.hi) return std::nullopt;

    const Interval dom(b.domain_lo.lo, b.domain_hi.hi);
    auto solve_level = [&](double v) -> Interval {
        if (v <= ymin.hi) return inc ? b.domain_lo : b.domain_hi; // at or below the image floor
        if (v >= ymax.lo) return inc ? b.domain_hi : b.domain_lo; // at or above the image ceiling
        return chain_root(m, b, Interval::exact(v), dom, tol);
    };
    const Interval xa = solve_level(target.lo);
    const Interval xb = solve_level(target.hi);
    PreimageSlice out;
    if (inc) {
        out.left = xa;
        out.right = xb;
    } else {
        out.left = xb;
        out.right = xa;
    }
    return out;
}

std::optional<Interval> branch_preimage(const PiecewiseMap& m, const Branch& b,
                                        const Interval& target, const MapTolerances& tol) {
    auto s = branch_preimage_slice(m, b, target, tol);
    if (!s) return std::nullopt;
    return Interval(s->left.lo, s->right.hi);
}

// ---- distortion excess ------------------------------------------------------

Interval map_distortion_sup(const PiecewiseMap& m, const MapTolerances& tol) {
    Interval sup(0.0, 0.0);
    for (const Branch& b : m.branches) {
        const Interval dom(b.domain_lo.lo, b.domain_hi.hi);
        const Interval s =
            verified_max(dom, [&](const Interval& c) { return chain_distortion(m, b, c); },
                         tol.max_subdiv_depth / 2, 1e-6);
        sup = Interval(std::max(sup.lo, s.lo), std::max(sup.hi, s.hi));
    }
    return Interval(std::max(0.0, sup.lo), sup.hi);
}

DistortionExcess distortion_excess_integral(const PiecewiseMap& m, double l,
                                            const MapTolerances& tol) {
    if (!(l > 0.0)) throw ConfigError("distortion threshold must be positive");
    Interval integral(0.0, 0.0);
    double sup_below = 0.0;

    for (const Branch& b : m.branches) {
        std::function<void(const Interval&, int, double)> rec = [&](const Interval& cell,
                                                                    int depth, double budget) {
            const Interval D = chain_distortion(m, b, cell);
            if (D.hi <= l) {
                sup_below = std::max(sup_below, D.hi);
                return;
            }
            const bool inside = D.lo > l;
            Interval contrib = chain_distortion_integral(m, b, cell);
            if (!inside) contrib.lo = 0.0;
            const double err = contrib.hi - contrib.lo;
            if (depth >= tol.max_subdiv_depth || cell_atomic(cell) ||
                err <= std::max(budget, 1e-7 * (1.0 + contrib.hi))) {
                integral = integral + contrib;
                if (!inside) sup_below = std::max(sup_below, std::min(l, D.hi));
                return;
            }
            const double mid = cell.mid();
            rec(Interval(cell.lo, mid), depth + 1, budget / 2.0);
            rec(Interval(mid, cell.hi), depth + 1, budget / 2.0);
        };
        const double branch_budget = 1e-4 / double(m.branches.size());
        rec(Interval(b.domain_lo.lo, b.domain_hi.hi), 0, branch_budget);
    }
    return {integral, Interval(0.0, sup_below)};
}

} // namespace ulamcert
