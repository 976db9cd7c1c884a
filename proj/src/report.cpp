#include "ctrlforge/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctrlforge/serialization.hpp"

namespace ctrlforge {

using nlohmann::json;

json make_report(const DesignSession& session) {
    json iterations = json::array();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& it : session.iterations) {
        best = std::min(best, it.feedback.index_j);
        iterations.push_back({
            {"k", it.k},
            {"action", it.action_kind},
            {"rationale", it.action_rationale},
            {"d_theta", it.theta.size()},
            {"j", it.feedback.index_j},
            {"best_j", best},
            {"overshoot_pct", it.feedback.metrics.overshoot_pct},
            {"sse_volts", it.feedback.metrics.sse_volts},
            {"settling_time_s", it.feedback.metrics.settling_time_s},
            {"chattering_tv", it.feedback.metrics.chattering_tv},
            {"specs_met", it.feedback.specs_met},
        });
    }

    const auto& spec = session.problem.spec;
    const auto& final_metrics = session.iterations.at(session.best_iteration).feedback.metrics;
    json spec_table = json::array();
    spec_table.push_back({{"name", "overshoot_pct"},
                          {"limit", spec.max_overshoot_pct},
                          {"value", final_metrics.overshoot_pct},
                          {"pass", final_metrics.overshoot_pct < spec.max_overshoot_pct}});
    spec_table.push_back({{"name", "sse_pct"},
                          {"limit", spec.max_sse_pct},
                          {"value", final_metrics.sse_pct},
                          {"pass", final_metrics.sse_pct < spec.max_sse_pct}});
    spec_table.push_back({{"name", "chattering_tv"},
                          {"limit", spec.chattering_threshold},
                          {"value", final_metrics.chattering_tv},
                          {"pass", final_metrics.chattering_tv <= spec.chattering_threshold}});

    json convergence = json::array();
    best = std::numeric_limits<double>::infinity();
    for (const auto& it : session.iterations) {
        best = std::min(best, it.feedback.index_j);
        convergence.push_back({{"k", it.k}, {"best_j", best}});
    }

    return json{
        {"schema_version", session.schema_version},
        {"iterations", std::move(iterations)},
        {"final",
         {{"iteration", session.best_iteration},
          {"structure", structure_to_json(session.best_structure)},
          {"theta", session.best_theta},
          {"j", session.best_j}}},
        {"spec_table", std::move(spec_table)},
        {"convergence", std::move(convergence)},
        {"termination_reason", std::string(to_string(session.termination))},
    };
}

std::string report_text(const json& report) {
    std::ostringstream os;
    os << "  k  action            d  J           best J      Mp%      e_ss V   TV        met\n";
    for (const auto& it : report.at("iterations")) {
        char line[160];
        std::snprintf(line, sizeof(line), "%3d  %-16s %2d  %-11.4g %-11.4g %-8.3f %-8.4f %-9.3f %s\n",
                      it.at("k").get<int>(), it.at("action").get<std::string>().c_str(),
                      static_cast<int>(it.at("d_theta").get<std::size_t>()),
                      it.at("j").get<double>(), it.at("best_j").get<double>(),
                      it.at("overshoot_pct").get<double>(), it.at("sse_volts").get<double>(),
                      it.at("chattering_tv").get<double>(),
                      it.at("specs_met").get<bool>() ? "yes" : "no");
        os << line;
    }
    os << "termination: " << report.at("termination_reason").get<std::string>() << "\n";
    os << "final controller: iteration " << report.at("final").at("iteration") << ", J = "
       << report.at("final").at("j").get<double>() << "\n";
    for (const auto& row : report.at("spec_table")) {
        char line[160];
        std::snprintf(line, sizeof(line), "  %-14s limit %-9.4g value %-12.6g %s\n",
                      row.at("name").get<std::string>().c_str(), row.at("limit").get<double>(),
                      row.at("value").get<double>(),
                      row.at("pass").get<bool>() ? "PASS" : "FAIL");
        os << line;
    }
    return os.str();
}

std::string convergence_csv(const DesignSession& session) {
    std::ostringstream os;
    os << "k,best_j\n";
    double best = std::numeric_limits<double>::infinity();
    for (const auto& it : session.iterations) {
        best = std::min(best, it.feedback.index_j);
        os << it.k << ',' << format_sig9(best) << '\n';
    }
    return os.str();
}

}  // namespace ctrlforge
