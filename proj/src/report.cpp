#include "ulamcert/report.hpp"

#include <cinttypes>
#include <fstream>
#include <ostream>

namespace ulamcert {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::ordered_json jiv(const Interval& a) {
    return nlohmann::ordered_json::array({fmt(a.lo), fmt(a.hi)});
}

nlohmann::ordered_json map_block(const JobConfig& cfg) {
    nlohmann::ordered_json m;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& b : cfg.branches) {
        nlohmann::ordered_json jb;
        jb["domain"] = nlohmann::ordered_json::array(
            {b.lo_auto ? "auto" : fmt(b.domain_lo.lo), b.hi_auto ? "auto" : fmt(b.domain_hi.hi)});
        jb["formula"] = b.formula;
        arr.push_back(jb);
    }
    m["branches"] = arr;
    m["iterate"] = cfg.iterate;
    return m;
}

} // namespace

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

Report run_certify(const JobConfig& cfg) {
    const MapTolerances tol;

    PiecewiseMap m = build_map(cfg.branches, tol);
    if (cfg.iterate > 1) m = iterate_map(m, cfg.iterate, tol);

    // Lasota-Yorke coefficients: user-supplied beats everything, then the
    // Lorenz route for unbounded maps, then the one-step route (holed maps
    // get the hole inequality from the closed one-step pair).
    LYCertificate ly;
    if (cfg.user_ly) {
        ly = ly_user((*cfg.user_ly)[0], (*cfg.user_ly)[1], (*cfg.user_ly)[2]);
    } else if (cfg.lorenz_l) {
        if (cfg.mode == CertMode::escape)
            throw ConfigError("the Lorenz route has no hole variant; supply ly directly");
        ly = ly_lorenz(m, *cfg.lorenz_l, tol);
    } else if (cfg.mode == CertMode::escape) {
        ly = ly_hole(ly_one_step(m));
    } else {
        ly = ly_iterate(ly_one_step(m));
    }

    UlamMatrix u = build_ulam(m, cfg.k, tol);
    if (cfg.mode == CertMode::escape) {
        Hole h{*cfg.hole};
        u = apply_hole_mask(u, h);
    }

    ContractionCertificate cc;
    bool contraction_ok = true;
    try {
        cc = cfg.mode == CertMode::escape
                 ? estimate_lambda2_escape(u, cfg.lambda2_target, cfg.n_max, cfg.threads)
                 : estimate_lambda2_mixing(u, cfg.lambda2_target, cfg.n_max, cfg.threads);
    } catch (const NoContraction& nc) {
        cc = nc.best;
        contraction_ok = false;
    }

    const ApproxCoefficients ac = approx_coefficients(ly);
    const DecayCertificate dc = make_decay_certificate(ly, ac, cc, u.partition.delta, cfg.mode);
    const bool conclusive = contraction_ok && dc.conclusive;

    nlohmann::ordered_json j;
    j["mode"] = cfg.mode == CertMode::escape ? "escape" : "mixing";
    j["delta"] = "1/" + std::to_string(cfg.k);
    j["k"] = cfg.k;
    j["map"] = map_block(cfg);
    j["n1"] = dc.n1;
    j["lambda1"] = jiv(ly.lambda1);
    j["lambda2"] = jiv(cc.lambda2);
    j["A"] = jiv(ly.A);
    j["B"] = jiv(ly.B);
    j["C"] = jiv(ac.C);
    j["D"] = jiv(ac.D);
    j["ly_provenance"] = ly.provenance == LYProvenance::user_supplied ? "user_supplied" : "computed";
    j["M"] = nlohmann::ordered_json::array(
        {nlohmann::ordered_json::array({jiv(dc.M.m11), jiv(dc.M.m12)}),
         nlohmann::ordered_json::array({jiv(dc.M.m21), jiv(dc.M.m22)})});
    j["rho"] = jiv(dc.rho);
    j["a"] = jiv(dc.a);
    j["b"] = jiv(dc.b);
    j["decay_strong_const"] = jiv(dc.strong_const);
    j["decay_weak_const"] = jiv(dc.weak_const);
    j["conclusive"] = conclusive;
    j["contraction"] = {{"achieved", contraction_ok},
                        {"space", cc.space == ContractionSpace::whole ? "whole" : "zero_average"},
                        {"basis_count", cc.basis_count},
                        {"n1", cc.n1},
                        {"lambda2_upper", fmt(cc.lambda2.hi)}};

    if (!cfg.table_multiples.empty()) {
        const auto rows = power_table(dc.M, dc.n1, cfg.table_multiples);
        auto arr = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json row;
            row["h"] = r.h;
            row["strong"] = nlohmann::ordered_json::array({jiv(r.strong_c1), jiv(r.strong_c2)});
            row["weak"] = nlohmann::ordered_json::array({jiv(r.weak_c1), jiv(r.weak_c2)});
            arr.push_back(row);
        }
        j["tables"] = arr;
    }

    if (cfg.mode == CertMode::escape) j["escape_rate"] = jiv(escape_rate_bound(dc));

    if (!cfg.out_density.empty() && cfg.mode == CertMode::mixing && conclusive) {
        const DensityResult dr = invariant_density_with_error(u, dc, ly, ac, 80, cfg.threads);
        j["density"] = {{"l1_error", fmt(dr.l1_error.hi)},
                        {"fix_residual", fmt(dr.fix_residual)},
                        {"mass_defect", fmt(dr.mass_defect)},
                        {"bv_norm", fmt(dr.bv_norm)},
                        {"chosen_N", dr.chosen_N},
                        {"term_fix", fmt(dr.term_fix)},
                        {"term_disc", fmt(dr.term_disc)},
                        {"term_decay", fmt(dr.term_decay)}};
        std::ofstream f(cfg.out_density);
        if (!f) throw ConfigError("cannot write density file '" + cfg.out_density + "'");
        f << "x_mid,f\n";
        for (std::size_t i = 0; i < dr.f_delta.size(); ++i)
            f << fmt((double(i) + 0.5) / double(cfg.k)) << "," << fmt(dr.f_delta[i]) << "\n";
    }

    {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : cc.trace)
            arr.push_back(nlohmann::ordered_json::array(
                {p.n, fmt(p.lambda2_upper), fmt(p.err_component)}));
        j["trace"] = arr;
    }
    if (!cfg.out_trace.empty()) {
        std::ofstream f(cfg.out_trace);
        if (!f) throw ConfigError("cannot write trace file '" + cfg.out_trace + "'");
        export_trace_csv(cc, f);
    }
    if (!cfg.out_matrix.empty()) {
        std::ofstream f(cfg.out_matrix);
        if (!f) throw ConfigError("cannot write matrix file '" + cfg.out_matrix + "'");
        export_matrix(u, f);
    }

    j["provenance"] = {{"tool_version", "ulamcert 1.0.0"},
                       {"rounding_mode", "nearest-then-outward-1ulp"},
                       {"wall_time_s", nullptr},
                       {"config_digest", fnv1a_hex(cfg.raw_text)}};

    Report r;
    r.doc = std::move(j);
    r.exit_code = conclusive ? 0 : 2;
    return r;
}

Report run_certify_mixing(const JobConfig& cfg) {
    if (cfg.mode != CertMode::mixing) throw ConfigError("config mode is not mixing");
    return run_certify(cfg);
}

Report run_certify_escape(const JobConfig& cfg) {
    if (cfg.mode != CertMode::escape) throw ConfigError("config mode is not escape");
    if (!cfg.hole) throw ConfigError("escape mode requires a hole");
    return run_certify(cfg);
}

void export_table(const Report& report, const std::string& format, std::ostream& os) {
    if (format == "json") {
        nlohmann::ordered_json j;
        j["tables"] = report.doc.contains("tables") ? report.doc["tables"]
                                                    : nlohmann::ordered_json::array();
        os << j.dump(2) << "\n";
        return;
    }
    if (format != "csv") throw ConfigError("table format must be csv or json");
    os << "h,strong_c1,strong_c2,weak_c1,weak_c2\n";
    if (!report.doc.contains("tables")) return;
    for (const auto& row : report.doc["tables"]) {
        os << row["h"].get<long long>() << "," << row["strong"][0][1].get<std::string>() << ","
           << row["strong"][1][1].get<std::string>() << "," << row["weak"][0][1].get<std::string>()
           << "," << row["weak"][1][1].get<std::string>() << "\n";
    }
}

} // namespace ulamcert
