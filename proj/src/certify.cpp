#include "ulamcert/certify.hpp"

#include <cfloat>
#include <cmath>

namespace ulamcert {

namespace {
const Interval kOne(1.0, 1.0);
const Interval kTwo(2.0, 2.0);

// upper bound on sum |v_i - w_i| from a round-to-nearest accumulation
double sad_upper(const std::vector<double>& v, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += std::fabs(v[i] - w[i]);
    const Interval nu = Interval::exact(double(v.size() + 2)) * Interval::exact(0x1p-53);
    return (Interval(0.0, s) / (kOne - nu / (kOne - nu))).hi;
}
} // namespace

BoundMatrix assemble_M(const LYCertificate& ly, const ApproxCoefficients& ac,
                       const ContractionCertificate& cc, const Interval& delta) {
    if (ly.lambda1.hi >= 1.0) throw ExpansionTooWeak("assemble_M needs lambda1 < 1");
    if (cc.n1 < 1) throw ConfigError("contraction certificate has no n1");
    BoundMatrix M;
    M.m11 = ly.A * pow_int(ly.lambda1, cc.n1);
    M.m12 = ly.B;
    M.m21 = delta * ac.C;
    M.m22 = delta * Interval::exact(double(cc.n1)) * ac.D + cc.lambda2;
    return M;
}

Interval spectral_radius_rho(const BoundMatrix& M) {
    const Interval disc = sqrt(sqr(M.m11 - M.m22) + Interval(4.0, 4.0) * M.m12 * M.m21);
    Interval rho = (M.m11 + M.m22 + disc) / kTwo;
    rho.lo = std::max(rho.lo, 0.0);
    return rho;
}

std::pair<Interval, Interval> left_eigen_ab(const BoundMatrix& M, const Interval& rho) {
    (void)rho; // the closed forms below re-derive the discriminant
    const Interval disc = sqrt(sqr(M.m11 - M.m22) + Interval(4.0, 4.0) * M.m12 * M.m21);
    const Interval num = M.m11 - M.m22 + disc;
    const Interval den = num + kTwo * M.m12;
    if (den.contains(0.0))
        throw PrecisionError("degenerate eigenvector denominator enclosure");
    return {num / den, kTwo * M.m12 / den};
}

DecayCertificate make_decay_certificate(const LYCertificate& ly, const ApproxCoefficients& ac,
                                        const ContractionCertificate& cc, const Interval& delta,
                                        CertMode mode) {
    if (mode == CertMode::mixing && cc.space != ContractionSpace::zero_average)
        throw ConfigError("mixing certificate needs a zero-average contraction");
    if (mode == CertMode::escape && cc.space != ContractionSpace::whole)
        throw ConfigError("escape certificate needs a whole-space contraction");
    DecayCertificate dc;
    dc.M = assemble_M(ly, ac, cc, delta);
    dc.rho = spectral_radius_rho(dc.M);
    auto ab = left_eigen_ab(dc.M, dc.rho);
    dc.a = ab.first;
    dc.b = ab.second;
    dc.n1 = cc.n1;
    dc.mode = mode;
    dc.conclusive = dc.rho.hi < 1.0;
    dc.strong_const = ly.A / dc.a + ly.B / dc.b;
    dc.weak_const = ly.B / dc.b;
    return dc;
}

std::pair<Interval, Interval> decay_bounds(const DecayCertificate& dc, long long k) {
    if (k < 0) throw ConfigError("decay bound needs k >= 0");
    const Interval factor = pow_int(dc.rho, k / dc.n1);
    return {dc.strong_const * factor, dc.weak_const * factor};
}

std::vector<PowerTableRow> power_table(const BoundMatrix& M, int n1,
                                       const std::vector<long long>& multiples) {
    std::vector<PowerTableRow> rows;
    Interval p11 = kOne, p12(0.0, 0.0), p21(0.0, 0.0), p22 = kOne;
    long long done = 0;
    for (long long i : multiples) {
        if (i < done) throw ConfigError("power table steps must be ascending");
        for (; done < i; ++done) {
            const Interval q11 = p11 * M.m11 + p12 * M.m21;
            const Interval q12 = p11 * M.m12 + p12 * M.m22;
            const Interval q21 = p21 * M.m11 + p22 * M.m21;
            const Interval q22 = p21 * M.m12 + p22 * M.m22;
            p11 = q11;
            p12 = q12;
            p21 = q21;
            p22 = q22;
        }
        rows.push_back({i * n1, p11, p12, p21, p22});
    }
    return rows;
}

Interval escape_rate_bound(const DecayCertificate& dc) {
    if (dc.mode != CertMode::escape)
        throw ConfigError("escape rate needs an escape-mode certificate");
    if (dc.rho.hi >= 1.0) return Interval(0.0, 0.0); // inconclusive, not erroneous
    const Interval rho(std::max(dc.rho.lo, DBL_TRUE_MIN), std::max(dc.rho.hi, DBL_TRUE_MIN));
    return -log(rho) / Interval::exact(double(dc.n1));
}

DensityResult invariant_density_with_error(const UlamMatrix& u, const DecayCertificate& dc,
                                           const LYCertificate& ly, const ApproxCoefficients& ac,
                                           int max_multiples, int threads) {
    if (dc.mode != CertMode::mixing || !dc.conclusive)
        throw ConfigError("density bound needs a conclusive mixing certificate");
    if (!u.hole_rows.empty()) throw ConfigError("density bound needs a closed matrix");

    DensityResult out;
    out.f_delta = approx_fixed_point(u, threads);

    // normalize the mass to 1 and certify the defect
    const std::size_t k = out.f_delta.size();
    {
        Interval mass(0.0, 0.0);
        for (double v : out.f_delta) mass = mass + Interval::exact(v);
        mass = mass * u.partition.delta;
        const double scale = 1.0 / mass.mid();
        for (double& v : out.f_delta) v *= scale;
        Interval mass2(0.0, 0.0);
        for (double v : out.f_delta) mass2 = mass2 + Interval::exact(v);
        mass2 = mass2 * u.partition.delta;
        out.mass_defect = (abs(mass2 - kOne)).hi;
    }

    // certified near-fixity
    RigorousVector rv{out.f_delta, 0.0};
    const RigorousVector Lf = rigorous_matvec(u, rv);
    out.fix_residual = ((u.partition.delta * Interval(0.0, sad_upper(Lf.values, out.f_delta))) +
                        Interval(0.0, Lf.err_l1)).hi;
    out.bv_norm = strong_norm_bv(out.f_delta);

    // ||f||_BV <= B/(1 - A lambda1) for the true invariant density
    const Interval f_bv = ly.B / (kOne - ly.A * ly.lambda1);
    const Interval mass_hi(0.0, 1.0 + out.mass_defect);
    const Interval S = Interval(0.0, out.bv_norm) + mass_hi * f_bv; // ||v||_BV bound
    const Interval dm(0.0, out.mass_defect);
    const Interval eps(0.0, out.fix_residual);
    const Interval colsum(0.0, std::max(1.0, u.max_col_sum_hi));

    double best = 1.0 + mass_hi.hi; // trivial bound ||f_delta|| + ||f||
    out.chosen_N = 0;

    Interval p11 = kOne, p12(0.0, 0.0), p21(0.0, 0.0), p22 = kOne;
    for (int i = 1; i <= max_multiples; ++i) {
        const Interval q11 = p11 * dc.M.m11 + p12 * dc.M.m21;
        const Interval q12 = p11 * dc.M.m12 + p12 * dc.M.m22;
        const Interval q21 = p21 * dc.M.m11 + p22 * dc.M.m21;
        const Interval q22 = p21 * dc.M.m12 + p22 * dc.M.m22;
        p11 = q11;
        p12 = q12;
        p21 = q21;
        p22 = q22;

        const long long N = static_cast<long long>(i) * dc.n1;
        const Interval Ni = Interval::exact(double(N));
        const Interval t1 = eps * Ni * pow_int(colsum, N);
        const Interval t2 =
            u.partition.delta * (ac.C * Interval(0.0, out.bv_norm) + Ni * ac.D * mass_hi);

        // route 1: ||L^N v||_w <= (B/b) rho^i ||v||_BV
        const Interval decay_w = dc.weak_const * pow_int(dc.rho, i) * S;
        const double e_weak = (t1 + t2 + decay_w + dm).hi;
        if (e_weak < best) {
            best = e_weak;
            out.chosen_N = N;
            out.term_fix = t1.hi;
            out.term_disc = t2.hi;
            out.term_decay = (decay_w + dm).hi;
        }

        // route 2: self-consistent bound through the M^i rows
        if (p22.hi < 1.0) {
            const Interval num = t1 + t2 + p21 * S + p22 * dm + dm;
            const double e_fix = (num / (kOne - p22)).hi;
            if (e_fix < best) {
                best = e_fix;
                out.chosen_N = N;
                out.term_fix = t1.hi;
                out.term_disc = t2.hi;
                out.term_decay = (p21 * S + p22 * dm + dm).hi;
            }
        }
    }
    (void)k;
    out.l1_error = Interval(0.0, best);
    return out;
}

} // namespace ulamcert
