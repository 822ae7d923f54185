#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

#include "ulamcert/report.hpp"

namespace {

struct Options {
    std::string config_path;
    std::string delta;
    double lambda2_target = -1.0;
    int n_max = -1;
    int threads = -1;
    std::string out;
    std::string table;
    bool timing = false;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config_path, "job configuration file")->required();
    cmd->add_option("--delta", o.delta, "grid size, e.g. 2^-13 (overrides config)");
    cmd->add_option("--lambda2-target", o.lambda2_target, "coarse contraction target");
    cmd->add_option("--n-max", o.n_max, "contraction search cap");
    cmd->add_option("--threads", o.threads, "worker cap (results are thread-count independent)");
    cmd->add_option("--out", o.out, "certificate output path (default: config or stdout)");
    cmd->add_option("--table", o.table, "power-table CSV output path");
    cmd->add_flag("--timing", o.timing, "record wall time in the report provenance");
}

int run(ulamcert::CertMode mode, const Options& o) {
    using namespace ulamcert;
    JobConfig cfg = parse_config_file(o.config_path);
    cfg.mode = mode;
    if (!o.delta.empty()) cfg.k = parse_delta_pow2(o.delta);
    if (o.lambda2_target > 0.0) cfg.lambda2_target = o.lambda2_target;
    if (o.n_max > 0) cfg.n_max = o.n_max;
    if (o.threads > 0) cfg.threads = o.threads;
    if (!o.table.empty()) cfg.out_table = o.table;
    cfg.timing = o.timing;

    const auto t0 = std::chrono::steady_clock::now();
    Report report = mode == CertMode::escape ? run_certify_escape(cfg) : run_certify_mixing(cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.timing) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", secs);
        report.doc["provenance"]["wall_time_s"] = buf;
    }
    std::cerr << "certify: finished in " << secs << " s, "
              << (report.exit_code == 0 ? "conclusive" : "inconclusive") << "\n";

    const std::string out_path = !o.out.empty() ? o.out : cfg.out_certificate;
    if (out_path.empty()) {
        std::cout << report.doc.dump(2) << "\n";
    } else {
        std::ofstream f(out_path);
        if (!f) throw ConfigError("cannot write report to '" + out_path + "'");
        f << report.doc.dump(2) << "\n";
    }
    if (!cfg.out_table.empty()) {
        std::ofstream f(cfg.out_table);
        if (!f) throw ConfigError("cannot write table to '" + cfg.out_table + "'");
        export_table(report, "csv", f);
    }
    return report.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"certified upper bounds on convergence to equilibrium and escape rates\n"
                 "for piecewise expanding interval maps"};
    app.require_subcommand(1);
    Options o;
    CLI::App* mixing = app.add_subcommand("mixing", "certify convergence to equilibrium");
    CLI::App* escape = app.add_subcommand("escape", "certify an escape rate for a holed system");
    add_common(mixing, o);
    add_common(escape, o);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto mode = app.got_subcommand(escape) ? ulamcert::CertMode::escape
                                                     : ulamcert::CertMode::mixing;
        return run(mode, o);
    } catch (const ulamcert::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
