#pragma once

#include <json.hpp>

#include "ulamcert/config.hpp"

namespace ulamcert {

struct Report {
    nlohmann::ordered_json doc;
    int exit_code = 0; // 0 conclusive, 2 inconclusive-but-valid
};

// End-to-end pipelines.  Both emit a full report even when the certificate
// is inconclusive (exit_code 2); configuration problems throw ConfigError.
Report run_certify_mixing(const JobConfig& cfg);
Report run_certify_escape(const JobConfig& cfg);
Report run_certify(const JobConfig& cfg);

// CSV columns: h, strong_c1, strong_c2, weak_c1, weak_c2 (the directed upper
// bounds); json mirrors the certificate schema.
void export_table(const Report& report, const std::string& format, std::ostream& os);

std::string fnv1a_hex(const std::string& data);

} // namespace ulamcert
