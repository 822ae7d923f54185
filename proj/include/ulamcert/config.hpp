#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ulamcert/certify.hpp"

namespace ulamcert {

// Flat sectioned key-value configuration: [map], [discretization],
// [certification], [outputs].  See README for the full key list.
struct JobConfig {
    std::vector<BranchSpec> branches;
    int iterate = 1;

    long long k = 0; // delta = 1/k, k a power of two

    CertMode mode = CertMode::mixing;
    std::optional<Interval> hole;
    double lambda2_target = 0.5;
    int n_max = 64;
    std::optional<std::array<Interval, 3>> user_ly; // A, lambda1, B
    std::optional<double> lorenz_l;

    std::vector<long long> table_multiples; // i values for M^i rows
    std::string out_certificate;
    std::string out_table;
    std::string out_density;
    std::string out_trace;
    std::string out_matrix;

    int threads = 1;
    bool timing = false;

    std::string raw_text; // hashed into the provenance digest
};

JobConfig parse_config_text(const std::string& text);
JobConfig parse_config_file(const std::string& path);

// "2^-13", "1/8192" or a plain integer k; must be a power of two.
long long parse_delta_pow2(const std::string& text);

} // namespace ulamcert
