#pragma once

#include <string>

#include <json.hpp>

#include "thomaslab/config.hpp"

namespace tlab {

struct RunOutcome {
    int exit_code = 0;     // 0 all assertions pass, 1 some assertion failed
    nlohmann::json report; // also written to <out>/run_report.json
};

// $THOMAS_LAB_OUT when set, otherwise "out".
std::string default_out_dir();

// Executes the configured task, writes the CSV artifacts and run_report.json
// under out_dir. Numeric failures propagate as exceptions; the CLI maps them
// to exit code 3.
RunOutcome run_task(const RunConfig& cfg, const std::string& out_dir, int threads);

} // namespace tlab
