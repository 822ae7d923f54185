#include "ulamcert/config.hpp"

#include <fstream>
#include <sstream>

namespace ulamcert {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

// number, rational p/q, or "a,b" interval
Interval parse_value(const std::string& text) {
    const std::string t = trim(text);
    const std::size_t comma = t.find(',');
    if (comma != std::string::npos) {
        const Interval lo = parse_value(t.substr(0, comma));
        const Interval hi = parse_value(t.substr(comma + 1));
        const Interval out(lo.lo, hi.hi);
        if (!out.valid()) throw ConfigError("interval value '" + t + "' has lo > hi");
        return out;
    }
    const std::size_t slash = t.find('/');
    if (slash != std::string::npos) {
        const long long p = std::stoll(t.substr(0, slash));
        const long long q = std::stoll(t.substr(slash + 1));
        return interval_from_ratio(p, q);
    }
    if (t.find('.') == std::string::npos && (t.empty() || t.find_first_not_of("+-0123456789") ==
                                                              std::string::npos)) {
        return Interval::exact(double(std::stoll(t)));
    }
    return interval_from_decimal(t);
}

struct EndpointSpec {
    Interval value;
    bool is_auto = false;
};

EndpointSpec parse_endpoint(const std::string& text) {
    const std::string t = trim(text);
    if (t == "auto") return {Interval(), true};
    return {parse_value(t), false};
}

} // namespace

long long parse_delta_pow2(const std::string& text) {
    const std::string t = trim(text);
    long long k = 0;
    if (t.rfind("2^-", 0) == 0) {
        const int e = std::stoi(t.substr(3));
        if (e < 1 || e > 30) throw ConfigError("delta exponent out of range: " + t);
        k = 1LL << e;
    } else if (t.rfind("1/", 0) == 0) {
        k = std::stoll(t.substr(2));
    } else {
        k = std::stoll(t);
    }
    if (k < 2 || (k & (k - 1)) != 0)
        throw ConfigError("delta must be a power of two (got '" + t + "')");
    return k;
}

JobConfig parse_config_text(const std::string& text) {
    JobConfig cfg;
    cfg.raw_text = text;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        try {
            if (section == "map") {
                if (key == "branch") {
                    // lo : hi : formula
                    const std::size_t c1 = val.find(':');
                    const std::size_t c2 = val.find(':', c1 + 1);
                    if (c1 == std::string::npos || c2 == std::string::npos)
                        throw ConfigError("branch needs 'lo : hi : formula'");
                    const EndpointSpec lo = parse_endpoint(val.substr(0, c1));
                    const EndpointSpec hi = parse_endpoint(val.substr(c1 + 1, c2 - c1 - 1));
                    BranchSpec b;
                    b.domain_lo = lo.value;
                    b.lo_auto = lo.is_auto;
                    b.domain_hi = hi.value;
                    b.hi_auto = hi.is_auto;
                    b.formula = trim(val.substr(c2 + 1));
                    if (b.formula.empty()) throw ConfigError("branch formula is empty");
                    cfg.branches.push_back(std::move(b));
                } else if (key == "generator") {
                    const auto toks = split_ws(val);
                    if (toks.size() != 2 || toks[0] != "linear_mod1")
                        throw ConfigError("unknown generator '" + val + "'");
                    const std::size_t slash = toks[1].find('/');
                    const long long num =
                        std::stoll(slash == std::string::npos ? toks[1] : toks[1].substr(0, slash));
                    const long long den =
                        slash == std::string::npos ? 1 : std::stoll(toks[1].substr(slash + 1));
                    cfg.branches = linear_mod1_branches(num, den);
                } else if (key == "iterate") {
                    cfg.iterate = std::stoi(val);
                    if (cfg.iterate < 1) throw ConfigError("iterate must be >= 1");
                } else {
                    throw ConfigError("unknown key '" + key + "' in [map]");
                }
            } else if (section == "discretization") {
                if (key == "delta")
                    cfg.k = parse_delta_pow2(val);
                else
                    throw ConfigError("unknown key '" + key + "' in [discretization]");
            } else if (section == "certification") {
                if (key == "mode") {
                    if (val == "mixing")
                        cfg.mode = CertMode::mixing;
                    else if (val == "escape")
                        cfg.mode = CertMode::escape;
                    else
                        throw ConfigError("mode must be mixing or escape");
                } else if (key == "lambda2_target") {
                    cfg.lambda2_target = parse_value(val).mid();
                } else if (key == "n_max") {
                    cfg.n_max = std::stoi(val);
                } else if (key == "ly") {
                    const auto toks = split_ws(val);
                    if (toks.size() != 3) throw ConfigError("ly needs 'A lambda1 B'");
                    cfg.user_ly = {parse_value(toks[0]), parse_value(toks[1]), parse_value(toks[2])};
                } else if (key == "lorenz_l") {
                    cfg.lorenz_l = parse_value(val).mid();
                } else if (key == "hole") {
                    const auto toks = split_ws(val);
                    if (toks.size() != 2) throw ConfigError("hole needs 'lo hi'");
                    const Interval lo = parse_value(toks[0]);
                    const Interval hi = parse_value(toks[1]);
                    cfg.hole = Interval(lo.lo, hi.hi);
                } else {
                    throw ConfigError("unknown key '" + key + "' in [certification]");
                }
            } else if (section == "outputs") {
                if (key == "table_multiples") {
                    for (const auto& t : split_ws(val)) cfg.table_multiples.push_back(std::stoll(t));
                } else if (key == "certificate") {
                    cfg.out_certificate = val;
                } else if (key == "table") {
                    cfg.out_table = val;
                } else if (key == "density") {
                    cfg.out_density = val;
                } else if (key == "trace") {
                    cfg.out_trace = val;
                } else if (key == "matrix") {
                    cfg.out_matrix = val;
                } else {
                    throw ConfigError("unknown key '" + key + "' in [outputs]");
                }
            } else {
                throw ConfigError("key outside of any known section");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("line " + std::to_string(lineno) + ": malformed number in '" + val +
                              "'");
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }

    if (cfg.branches.empty()) throw ConfigError("config defines no map branches");
    if (cfg.k == 0) throw ConfigError("config sets no delta");
    if (cfg.mode == CertMode::escape && !cfg.hole)
        throw ConfigError("escape mode requires a hole");
    if (!(cfg.lambda2_target > 0.0 && cfg.lambda2_target < 1.0))
        throw ConfigError("lambda2_target must lie in (0,1)");
    return cfg;
}

JobConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace ulamcert
