#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctrlforge/plant.hpp"

namespace ctrlforge {

struct PerformanceSpec {
    double max_overshoot_pct = 5.0;
    double max_sse_pct = 2.0;
    double settling_band_pct = 2.0;
    // Duty total variation above this raises the chattering flag; calibrated
    // on the nominal boost problem so Sign-based laws trip it and
    // boundary-layer laws do not.
    double chattering_threshold = 5.0;

    void check() const;
};

struct MetricsReport {
    double overshoot_pct = 0.0;
    double sse_volts = 0.0;
    double sse_pct = 0.0;
    double settling_time_s = 0.0;
    double iae_volt_s = 0.0;
    double itae = 0.0;
    double chattering_tv = 0.0;
    std::vector<double> recovery_time_s;  // one entry per load event
    bool never_settled = false;
    bool diverged = false;
};

struct WeightSet {
    double w_overshoot = 2.0;    // per percent
    double w_sse = 10.0;         // per volt
    double w_settling = 20.0;    // per second of settling and recovery
    double w_chattering = 0.05;  // per unit of duty total variation
    double w_iae = 0.0;          // per volt-second
    double penalty_per_violation = 100.0;
    double j_divergence = 1e6;

    void check() const;
};

enum class SpecFlag {
    OvershootExceeded,
    SseExceeded,
    ChatteringDetected,
    Diverged,
    SettlingSlow,
};

std::string_view to_string(SpecFlag flag);

struct PerformanceFeedback {
    MetricsReport metrics;
    double index_j = 0.0;
    std::set<SpecFlag> spec_flags;
    bool specs_met = false;
    int iteration = 0;
};

// Individual metrics.
double overshoot(const Trajectory& traj, double v_ref);
// Worst constant-load-segment deviation of the trailing-window mean from
// v_ref. Segments come from the trajectory's r_load column. Throws
// ConfigError when the window does not fit inside every segment.
double steady_state_error(const Trajectory& traj, double v_ref, double window_s);
double chattering(const Trajectory& traj);

struct SettlingResult {
    double settling_time_s = 0.0;
    std::vector<double> recovery_time_s;
    bool never_settled = false;
};

SettlingResult settling_recovery(const Trajectory& traj, double v_ref, double band_pct,
                                 const std::vector<LoadEvent>& load_events);

// Full report for a completed run; window = trailing 20% of each segment.
MetricsReport compute_metrics(const Trajectory& traj, const Scenario& scenario,
                              const PerformanceSpec& spec);
MetricsReport diverged_metrics();

// J = sum w_i * M_i + penalty per violated hard spec; diverged runs get the
// fixed j_divergence value.
double performance_index(const MetricsReport& metrics, const WeightSet& weights,
                         const PerformanceSpec& spec);

PerformanceFeedback make_feedback(const MetricsReport& metrics, double index_j,
                                  const PerformanceSpec& spec, int iteration);

nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& doc);
nlohmann::json feedback_to_json(const PerformanceFeedback& f);
PerformanceFeedback feedback_from_json(const nlohmann::json& doc);

}  // namespace ctrlforge
