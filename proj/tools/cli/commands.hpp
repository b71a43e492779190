#pragma once

#include <nlohmann/json.hpp>

#include <ostream>

#include "cli/run_config.hpp"

namespace collabrep::cli {

// Each command returns its JSON report, writes it to config.out when set and
// prints a short human-readable summary to `log`. Wall-clock figures appear
// only under "timing" keys.
nlohmann::json cmd_synth(const RunConfig& config, std::ostream& log);
nlohmann::json cmd_eval(const RunConfig& config, std::ostream& log);
nlohmann::json cmd_select(const RunConfig& config, std::ostream& log);
nlohmann::json cmd_compare(const RunConfig& config, std::ostream& log);
nlohmann::json cmd_fit_dict(const RunConfig& config, std::ostream& log);

nlohmann::json run_command(const RunConfig& config, std::ostream& log);

// Copy of `report` with every "timing" member removed, at any depth.
nlohmann::json strip_timing(nlohmann::json report);

}  // namespace collabrep::cli
