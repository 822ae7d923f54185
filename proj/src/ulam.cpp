#include "ulamcert/ulam.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ulamcert {

namespace {

void finish_derived(UlamMatrix& u) {
    const long long k = u.partition.k;
    const std::size_t nnz = u.entries.size();
    u.mid.resize(nnz);
    u.col_rad_sum.assign(static_cast<std::size_t>(k), 0.0);
    u.col_sum_hi.assign(static_cast<std::size_t>(k), 0.0);
    u.max_col_rad_sum = 0.0;
    u.max_col_sum_hi = 0.0;
    u.max_col_nnz = 0;

    for (long long i = 0; i < k; ++i) {
        Interval rad_sum(0.0, 0.0), sum_hi(0.0, 0.0);
        const int begin = u.col_ptr[static_cast<std::size_t>(i)];
        const int end = u.col_ptr[static_cast<std::size_t>(i) + 1];
        for (int t = begin; t < end; ++t) {
            const Interval& e = u.entries[static_cast<std::size_t>(t)];
            const double mid = e.mid();
            u.mid[static_cast<std::size_t>(t)] = mid;
            rad_sum = rad_sum + Interval(0.0, e.rad_from(mid));
            sum_hi = sum_hi + Interval(0.0, e.hi);
        }
        u.col_rad_sum[static_cast<std::size_t>(i)] = rad_sum.hi;
        u.col_sum_hi[static_cast<std::size_t>(i)] = sum_hi.hi;
        u.max_col_rad_sum = std::max(u.max_col_rad_sum, rad_sum.hi);
        u.max_col_sum_hi = std::max(u.max_col_sum_hi, sum_hi.hi);
        u.max_col_nnz = std::max(u.max_col_nnz, end - begin);
    }

    // row-major midpoint copy
    u.row_ptr.assign(static_cast<std::size_t>(k) + 1, 0);
    for (std::size_t t = 0; t < nnz; ++t) u.row_ptr[static_cast<std::size_t>(u.row_idx[t]) + 1]++;
    for (long long j = 0; j < k; ++j)
        u.row_ptr[static_cast<std::size_t>(j) + 1] += u.row_ptr[static_cast<std::size_t>(j)];
    u.col_idx.resize(nnz);
    u.row_mid.resize(nnz);
    std::vector<int> cursor(u.row_ptr.begin(), u.row_ptr.end() - 1);
    for (long long i = 0; i < k; ++i) {
        for (int t = u.col_ptr[static_cast<std::size_t>(i)];
             t < u.col_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
            const int j = u.row_idx[static_cast<std::size_t>(t)];
            const int slot = cursor[static_cast<std::size_t>(j)]++;
            u.col_idx[static_cast<std::size_t>(slot)] = static_cast<int>(i);
            u.row_mid[static_cast<std::size_t>(slot)] = u.mid[static_cast<std::size_t>(t)];
        }
    }
}

} // namespace

UlamMatrix build_ulam(const PiecewiseMap& m, long long k, const MapTolerances& tol) {
    if (k < 2) throw ConfigError("partition needs k >= 2");

    UlamMatrix u;
    u.partition.k = k;
    u.partition.delta = interval_from_ratio(1, k);
    u.stochastic = true;

    // per-column accumulation of interval masses (scaled by k at the end)
    std::vector<std::vector<std::pair<int, Interval>>> cols(static_cast<std::size_t>(k));
    const Interval kI = Interval::exact(double(k));

    for (const Branch& b : m.branches) {
        const Interval vlo = chain_value(m, b, b.domain_lo);
        const Interval vhi = chain_value(m, b, b.domain_hi);
        const bool inc = b.monot == Monotonicity::increasing;
        const Interval ymin = inc ? vlo : vhi;
        const Interval ymax = inc ? vhi : vlo;

        // Preimage enclosure of every grid line the image hull reaches.  A
        // line within the fuzz of an image end degenerates to the branch
        // endpoint enclosure, which keeps the line list consecutive and the
        // row bookkeeping exact.
        const long long j_first =
            std::max<long long>(1, static_cast<long long>(std::floor(ymin.lo * double(k))));
        const long long j_last = std::min<long long>(
            k - 1, static_cast<long long>(std::ceil(ymax.hi * double(k))));

        std::vector<Interval> xs;      // preimage enclosures, ascending in x
        std::vector<long long> lines;  // their j values (consecutive)
        Interval bracket(b.domain_lo.lo, b.domain_hi.hi);
        auto solve_line = [&](long long j) {
            const Interval g = interval_from_ratio(j, k);
            Interval x;
            if (g.lo <= ymin.hi)
                x = inc ? b.domain_lo : b.domain_hi;
            else if (g.hi >= ymax.lo)
                x = inc ? b.domain_hi : b.domain_lo;
            else {
                x = chain_root(m, b, g, bracket, tol);
                bracket = Interval(x.lo, bracket.hi);
            }
            xs.push_back(x);
            lines.push_back(j);
        };
        if (inc)
            for (long long j = j_first; j <= j_last; ++j) solve_line(j);
        else
            for (long long j = j_last; j >= j_first; --j) solve_line(j);

        std::vector<Interval> pts;
        pts.push_back(b.domain_lo);
        for (const Interval& x : xs) pts.push_back(x);
        pts.push_back(b.domain_hi);

        for (std::size_t t = 0; t + 1 < pts.size(); ++t) {
            long long row;
            if (lines.empty()) {
                // whole image inside one cell; no grid line within fuzz
                const double ym = 0.5 * (ymin.lo + ymax.hi);
                row = static_cast<long long>(std::floor(ym * double(k))) + 1;
                row = std::max<long long>(1, std::min<long long>(k, row));
            } else if (inc) {
                row = t == 0 ? lines[0] : lines[t - 1] + 1;
            } else {
                row = t == 0 ? lines[0] + 1 : lines[t - 1];
            }
            if (row < 1 || row > k) continue; // degenerate boundary sliver

            const Interval a_enc = pts[t], b_enc = pts[t + 1];
            if (b_enc.hi <= a_enc.lo) continue; // zero-width piece
            const long long i_first = std::max<long long>(
                1, static_cast<long long>(std::floor(a_enc.lo * double(k))) + 1);
            const long long i_last = std::min<long long>(
                k, static_cast<long long>(std::floor(b_enc.hi * double(k))) + 1);
            for (long long i = i_first; i <= i_last; ++i) {
                const Interval cell_lo = interval_from_ratio(i - 1, k);
                const Interval cell_hi = interval_from_ratio(i, k);
                const Interval left(std::max(a_enc.lo, cell_lo.lo),
                                    std::max(a_enc.hi, cell_lo.hi));
                const Interval right(std::min(b_enc.lo, cell_hi.lo),
                                     std::min(b_enc.hi, cell_hi.hi));
                Interval len = right - left;
                len = Interval(std::max(len.lo, 0.0), std::max(len.hi, 0.0));
                if (len.hi <= 0.0) continue;
                const Interval mass = len * kI;
                cols[static_cast<std::size_t>(i - 1)].push_back(
                    {static_cast<int>(row - 1), mass});
            }
        }
    }

    // merge duplicates, clamp into [0,1], assemble CSC
    u.col_ptr.assign(static_cast<std::size_t>(k) + 1, 0);
    for (long long i = 0; i < k; ++i) {
        auto& col = cols[static_cast<std::size_t>(i)];
        std::sort(col.begin(), col.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t w = 0;
        for (std::size_t r = 0; r < col.size();) {
            Interval sum = col[r].second;
            std::size_t s = r + 1;
            while (s < col.size() && col[s].first == col[r].first) {
                sum = sum + col[s].second;
                ++s;
            }
            col[w++] = {col[r].first, Interval(std::max(0.0, sum.lo), std::min(1.0, sum.hi))};
            r = s;
        }
        col.resize(w);
        u.col_ptr[static_cast<std::size_t>(i) + 1] =
            u.col_ptr[static_cast<std::size_t>(i)] + static_cast<int>(w);
    }
    for (long long i = 0; i < k; ++i)
        for (auto& [row, e] : cols[static_cast<std::size_t>(i)]) {
            u.row_idx.push_back(row);
            u.entries.push_back(e);
        }

    // closed-system consistency: every column sum must enclose 1
    for (long long i = 0; i < k; ++i) {
        Interval sum(0.0, 0.0);
        for (int t = u.col_ptr[static_cast<std::size_t>(i)];
             t < u.col_ptr[static_cast<std::size_t>(i) + 1]; ++t)
            sum = sum + u.entries[static_cast<std::size_t>(t)];
        if (!sum.contains(1.0))
            throw PrecisionError("ulam column " + std::to_string(i + 1) + " sum " +
                                 to_string(sum) + " excludes 1 (assembly bug)");
    }

    finish_derived(u);
    return u;
}

UlamMatrix apply_hole_mask(const UlamMatrix& u, const Hole& h) {
    const long long k = u.partition.k;
    if (!h.interval.valid() || h.interval.lo < 0.0 || h.interval.hi > 1.0)
        throw ConfigError("hole must be a subinterval of [0,1]");
    if (h.interval.lo == h.interval.hi) return u; // empty hole

    auto grid_index = [&](double v, const char* side) -> long long {
        const double scaled = v * double(k);
        const double r = std::nearbyint(scaled);
        if (scaled != r)
            throw ConfigError(std::string("hole ") + side + " endpoint " + std::to_string(v) +
                              " is not on a grid line; use k divisible by the endpoint denominator");
        return static_cast<long long>(r);
    };
    const long long lo = grid_index(h.interval.lo, "lower");
    const long long hi = grid_index(h.interval.hi, "upper");
    if (lo >= hi) throw ConfigError("hole has no full cell at this k");

    UlamMatrix out = u;
    out.stochastic = false;
    out.hole_rows.clear();
    for (long long j = lo; j < hi; ++j) out.hole_rows.push_back(static_cast<int>(j));

    // rebuild CSC without masked rows
    std::vector<char> masked(static_cast<std::size_t>(k), 0);
    for (int j : out.hole_rows) masked[static_cast<std::size_t>(j)] = 1;
    std::vector<int> cptr{0};
    std::vector<int> ridx;
    std::vector<Interval> ents;
    for (long long i = 0; i < k; ++i) {
        for (int t = u.col_ptr[static_cast<std::size_t>(i)];
             t < u.col_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
            const int j = u.row_idx[static_cast<std::size_t>(t)];
            if (masked[static_cast<std::size_t>(j)]) continue;
            ridx.push_back(j);
            ents.push_back(u.entries[static_cast<std::size_t>(t)]);
        }
        cptr.push_back(static_cast<int>(ridx.size()));
    }
    out.col_ptr = std::move(cptr);
    out.row_idx = std::move(ridx);
    out.entries = std::move(ents);
    finish_derived(out);
    return out;
}

ApproxCoefficients approx_coefficients(const LYCertificate& ly) {
    if (ly.lambda1.hi >= 1.0)
        throw ExpansionTooWeak("approximation coefficients need lambda1 < 1");
    const Interval one(1.0, 1.0), two(2.0, 2.0);
    ApproxCoefficients ac;
    ac.C = (ly.A * ly.lambda1 + one) * ly.A / (one - ly.lambda1);
    ac.D = ly.B * (ly.A * ly.lambda1 + two);
    return ac;
}

void export_matrix(const UlamMatrix& u, std::ostream& os) {
    os << "ulam k=" << u.partition.k << " hole=";
    if (u.hole_rows.empty()) {
        os << "none";
    } else {
        const long long k = u.partition.k;
        os << u.hole_rows.front() << "/" << k << "," << (u.hole_rows.back() + 1) << "/" << k;
    }
    os << "\n";
    char buf[96];
    for (long long i = 0; i < u.partition.k; ++i) {
        for (int t = u.col_ptr[static_cast<std::size_t>(i)];
             t < u.col_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
            const Interval& e = u.entries[static_cast<std::size_t>(t)];
            std::snprintf(buf, sizeof buf, "%d %lld %.17g %.17g\n",
                          u.row_idx[static_cast<std::size_t>(t)] + 1, i + 1, e.lo, e.hi);
            os << buf;
        }
    }
}

double weak_norm_l1(const UlamMatrix& u, const std::vector<double>& v) {
    Interval s(0.0, 0.0);
    for (double x : v) s = s + Interval(0.0, std::fabs(x));
    return (u.partition.delta * s).hi;
}

double strong_norm_bv(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    Interval s(0.0, std::fabs(v.front()));
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        s = s + abs(Interval::exact(v[i + 1]) - Interval::exact(v[i]));
    s = s + Interval(0.0, std::fabs(v.back()));
    return s.hi;
}

} // namespace ulamcert
