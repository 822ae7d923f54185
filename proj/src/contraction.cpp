#include "ulamcert/contraction.hpp"

#include <cmath>
#include <ostream>

#include "ulamcert/parallel.hpp"

namespace ulamcert {

namespace {

// gamma_n = n u / (1 - n u), outward rounded
Interval gamma_fp(long long n) {
    const Interval nu = Interval::exact(double(n)) * Interval::exact(0x1p-53);
    return nu / (Interval(1.0, 1.0) - nu);
}

// upper bound on sum |v_i| from a round-to-nearest accumulation
double sum_abs_upper(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::fabs(x);
    const Interval g = gamma_fp(static_cast<long long>(v.size()) + 1);
    return (Interval(0.0, s) / (Interval(1.0, 1.0) - g)).hi;
}

// upper bound on sum |v_i - w_i|
double sum_abs_diff_upper(const std::vector<double>& v, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += std::fabs(v[i] - w[i]);
    const Interval g = gamma_fp(static_cast<long long>(v.size()) + 2);
    return (Interval(0.0, s) / (Interval(1.0, 1.0) - g)).hi;
}

int max_row_nnz(const UlamMatrix& u) {
    int mx = 0;
    for (std::size_t j = 0; j + 1 < u.row_ptr.size(); ++j)
        mx = std::max(mx, u.row_ptr[j + 1] - u.row_ptr[j]);
    return mx;
}

// y = mid(P) x, row-major; per-row sums are sequential, so the result is
// independent of the thread partition.
void matvec_mid(const UlamMatrix& u, const std::vector<double>& x, std::vector<double>& y,
                int threads) {
    const std::size_t k = static_cast<std::size_t>(u.partition.k);
    y.assign(k, 0.0);
    parallel_for(k, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            double acc = 0.0;
            for (int t = u.row_ptr[j]; t < u.row_ptr[j + 1]; ++t)
                acc += u.row_mid[static_cast<std::size_t>(t)] *
                       x[static_cast<std::size_t>(u.col_idx[static_cast<std::size_t>(t)])];
            y[j] = acc;
        }
    });
}

// err after one midpoint matvec: propagation through the column-sum bound,
// the entry-radius term, and the floating-point accumulation term.
double propagate_err(const UlamMatrix& u, double err_in, double norm1_hi, int rmax) {
    const Interval prop = Interval(0.0, u.max_col_sum_hi) * Interval(0.0, err_in);
    const Interval rad = Interval(0.0, u.max_col_rad_sum) * Interval(0.0, norm1_hi);
    const Interval fp = gamma_fp(rmax + 2) * Interval(0.0, u.max_col_sum_hi) *
                        Interval(0.0, norm1_hi);
    return (prop + rad + fp).hi;
}

double norm1_upper(const UlamMatrix& u, const std::vector<double>& v) {
    return (u.partition.delta * Interval(0.0, sum_abs_upper(v))).hi;
}

ContractionCertificate run_basis_search(const UlamMatrix& u, double target, int n_max,
                                        int threads, ContractionSpace space,
                                        const std::vector<double>* w) {
    if (!(target > 0.0) || target >= 1.0)
        throw ConfigError("lambda2 target must lie in (0,1)");
    if (n_max < 1) throw ConfigError("n_max must be >= 1");
    const long long k = u.partition.k;
    const int rmax = max_row_nnz(u);

    // per-n maxima over the basis, merged from per-thread partials
    const int T = std::max(1, threads);
    std::vector<std::vector<double>> lam_part(static_cast<std::size_t>(T),
                                              std::vector<double>(static_cast<std::size_t>(n_max), 0.0));
    std::vector<std::vector<double>> err_part(static_cast<std::size_t>(T),
                                              std::vector<double>(static_cast<std::size_t>(n_max), 0.0));

    std::atomic<int> next_slot{0};
    parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t begin, std::size_t end) {
        const int slot = next_slot.fetch_add(1);
        auto& lam = lam_part[static_cast<std::size_t>(slot)];
        auto& errs = err_part[static_cast<std::size_t>(slot)];
        std::vector<double> v(static_cast<std::size_t>(k)), y;
        for (std::size_t i = begin; i < end; ++i) {
            std::fill(v.begin(), v.end(), 0.0);
            v[i] = double(k); // f_i, unit L1 mass
            double err = 0.0;
            for (int n = 1; n <= n_max; ++n) {
                const double nv1 = norm1_upper(u, v);
                matvec_mid(u, v, y, 1);
                err = propagate_err(u, err, nv1, rmax);
                v.swap(y);
                const double dist = w ? sum_abs_diff_upper(v, *w) : sum_abs_upper(v);
                const double r =
                    ((u.partition.delta * Interval(0.0, dist)) + Interval(0.0, err)).hi;
                lam[static_cast<std::size_t>(n - 1)] =
                    std::max(lam[static_cast<std::size_t>(n - 1)], r);
                errs[static_cast<std::size_t>(n - 1)] =
                    std::max(errs[static_cast<std::size_t>(n - 1)], err);
            }
        }
    });

    ContractionCertificate cert;
    cert.space = space;
    cert.basis_count = k;
    cert.trace.reserve(static_cast<std::size_t>(n_max));
    int best_n = 1;
    double best_lam = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n) {
        double lam = 0.0, err = 0.0;
        for (int t = 0; t < T; ++t) {
            lam = std::max(lam, lam_part[static_cast<std::size_t>(t)][static_cast<std::size_t>(n - 1)]);
            err = std::max(err, err_part[static_cast<std::size_t>(t)][static_cast<std::size_t>(n - 1)]);
        }
        cert.trace.push_back({n, lam, err});
        if (lam < best_lam) {
            best_lam = lam;
            best_n = n;
        }
        if (!cert.achieved && lam <= target) {
            cert.achieved = true;
            cert.n1 = n;
            cert.lambda2 = Interval(0.0, lam);
        }
    }
    if (!cert.achieved) {
        cert.n1 = best_n;
        cert.lambda2 = Interval(0.0, best_lam);
        throw NoContraction(cert);
    }
    return cert;
}

} // namespace

RigorousVector rigorous_matvec(const UlamMatrix& u, const RigorousVector& v) {
    if (v.values.size() != static_cast<std::size_t>(u.partition.k))
        throw ConfigError("matvec dimension mismatch");
    RigorousVector out;
    const double nv1 = norm1_upper(u, v.values);
    matvec_mid(u, v.values, out.values, 1);
    out.err_l1 = propagate_err(u, v.err_l1, nv1, max_row_nnz(u));
    return out;
}

std::vector<double> approx_fixed_point(const UlamMatrix& u, int threads) {
    const std::size_t k = static_cast<std::size_t>(u.partition.k);
    std::vector<double> x(k, 1.0), y;
    for (int iter = 0; iter < 500; ++iter) {
        matvec_mid(u, x, y, threads);
        // mass renormalization keeps the iteration away from under/overflow
        double mass = 0.0;
        for (double v : y) mass += v;
        if (mass > 0.0) {
            const double scale = double(u.partition.k) / mass;
            for (double& v : y) v *= scale;
        }
        double diff = 0.0;
        for (std::size_t i = 0; i < k; ++i) diff += std::fabs(y[i] - x[i]);
        x.swap(y);
        if (diff <= 1e-13 * double(u.partition.k)) break;
    }
    return x;
}

ContractionCertificate estimate_lambda2_mixing(const UlamMatrix& u, double target, int n_max,
                                               int threads) {
    if (!u.hole_rows.empty())
        throw ConfigError("mixing estimate needs a closed matrix (no hole rows)");
    const std::vector<double> w = approx_fixed_point(u, threads);
    return run_basis_search(u, target, n_max, threads, ContractionSpace::zero_average, &w);
}

ContractionCertificate estimate_lambda2_escape(const UlamMatrix& u, double target, int n_max,
                                               int threads) {
    if (u.hole_rows.empty())
        throw ConfigError("escape estimate needs a nonempty hole mask");
    return run_basis_search(u, target, n_max, threads, ContractionSpace::whole, nullptr);
}

void export_trace_csv(const ContractionCertificate& c, std::ostream& os) {
    os << "n,lambda2_upper,err_component\n";
    char buf[96];
    for (const auto& p : c.trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", p.n, p.lambda2_upper, p.err_component);
        os << buf;
    }
}

} // namespace ulamcert
