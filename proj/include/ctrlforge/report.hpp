#pragma once

#include <string>

#include <json.hpp>

#include "ctrlforge/orchestrator.hpp"

namespace ctrlforge {

// Derived entirely from the session log, so replay regenerates it byte for
// byte: per-iteration table, final controller, spec pass/fail table, and the
// best-so-far convergence series.
nlohmann::json make_report(const DesignSession& session);

std::string report_text(const nlohmann::json& report);
std::string convergence_csv(const DesignSession& session);

}  // namespace ctrlforge
