#pragma once

#include <map>
#include <string>

#include "ctrlforge/orchestrator.hpp"

namespace ctrlforge {

// INI-style problem configuration: [section] headers, key = value pairs,
// '#' comments. Unknown sections or keys are errors so typos surface early.
using IniData = std::map<std::string, std::map<std::string, std::string>>;

IniData parse_ini(const std::string& text);

struct RunConfig {
    DesignProblem problem;
    std::string out_dir = "out";
    int verbosity = 1;
};

RunConfig run_config_from_ini(const IniData& ini);
RunConfig load_run_config(const std::string& path);

// Scenario-only view of the same format ([plant], [scenario], [sim]); used
// by the standalone simulate command.
struct ScenarioConfig {
    Scenario scenario;
    SimConfig sim;
};

ScenarioConfig load_scenario_config(const std::string& path);

}  // namespace ctrlforge
