#include "ctrlforge/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ctrlforge {

using nlohmann::json;

void PerformanceSpec::check() const {
    if (max_overshoot_pct <= 0 || max_sse_pct <= 0 || settling_band_pct <= 0 ||
        chattering_threshold <= 0)
        throw ConfigError("performance spec thresholds must be positive");
}

void WeightSet::check() const {
    if (w_overshoot < 0 || w_sse < 0 || w_settling < 0 || w_chattering < 0 || w_iae < 0 ||
        penalty_per_violation < 0 || j_divergence < 0)
        throw ConfigError("weights must be non-negative");
}

std::string_view to_string(SpecFlag flag) {
    switch (flag) {
        case SpecFlag::OvershootExceeded: return "overshoot_exceeded";
        case SpecFlag::SseExceeded: return "sse_exceeded";
        case SpecFlag::ChatteringDetected: return "chattering_detected";
        case SpecFlag::Diverged: return "diverged";
        case SpecFlag::SettlingSlow: return "settling_slow";
    }
    return "unknown";
}

namespace {

SpecFlag flag_from(const std::string& name) {
    for (SpecFlag f : {SpecFlag::OvershootExceeded, SpecFlag::SseExceeded,
                       SpecFlag::ChatteringDetected, SpecFlag::Diverged, SpecFlag::SettlingSlow})
        if (name == to_string(f)) return f;
    throw ParseError("unknown spec flag '" + name + "'");
}

// Index ranges [begin, end) of constant-load stretches.
std::vector<std::pair<std::size_t, std::size_t>> segments(const Trajectory& traj) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t begin = 0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        if (traj.r_load[k] != traj.r_load[k - 1]) {
            out.emplace_back(begin, k);
            begin = k;
        }
    }
    out.emplace_back(begin, traj.size());
    return out;
}

}  // namespace

double overshoot(const Trajectory& traj, double v_ref) {
    if (traj.size() == 0) throw ConfigError("overshoot of an empty trajectory");
    const double peak = *std::max_element(traj.v_c.begin(), traj.v_c.end());
    return 100.0 * std::max(0.0, peak - v_ref) / v_ref;
}

double steady_state_error(const Trajectory& traj, double v_ref, double window_s) {
    if (traj.size() < 2) throw ConfigError("steady-state error needs at least two samples");
    if (window_s <= 0) throw ConfigError("steady-state window must be positive");
    const double dt = traj.t[1] - traj.t[0];
    double worst = 0.0;
    for (const auto& [begin, end] : segments(traj)) {
        const double seg_len = (end - begin) * dt;
        if (window_s > seg_len)
            throw ConfigError("steady-state window longer than a constant-load segment");
        const auto count = static_cast<std::size_t>(std::max(1.0, std::round(window_s / dt)));
        double sum = 0.0;
        for (std::size_t k = end - count; k < end; ++k) sum += traj.v_c[k];
        worst = std::max(worst, std::abs(sum / count - v_ref));
    }
    return worst;
}

double chattering(const Trajectory& traj) {
    if (traj.size() < 2) throw ConfigError("chattering needs at least two samples");
    double tv = 0.0;
    for (std::size_t k = 1; k < traj.size(); ++k)
        tv += std::abs(traj.duty[k] - traj.duty[k - 1]);
    return tv;
}

SettlingResult settling_recovery(const Trajectory& traj, double v_ref, double band_pct,
                                 const std::vector<LoadEvent>& load_events) {
    if (band_pct <= 0) throw ConfigError("settling band must be positive");
    if (traj.size() < 2) throw ConfigError("settling needs at least two samples");
    const double band = band_pct / 100.0 * v_ref;
    const double dt = traj.t[1] - traj.t[0];
    const double t_end = traj.t.back() + dt;
    const auto inside = [&](std::size_t k) { return std::abs(traj.v_c[k] - v_ref) <= band; };

    // Settling window ends at the first event; each event owns the stretch up
    // to the next one. The reported time is when the trace last re-enters the
    // band and stays.
    std::vector<double> boundaries{0.0};
    for (const auto& e : load_events) boundaries.push_back(e.time);
    boundaries.push_back(t_end);

    SettlingResult result;
    for (std::size_t seg = 0; seg + 1 < boundaries.size(); ++seg) {
        const double t0 = boundaries[seg];
        const double t1 = boundaries[seg + 1];
        const auto k0 = static_cast<std::size_t>(std::ceil(t0 / dt - 1e-9));
        const auto k1 = std::min(traj.size(), static_cast<std::size_t>(std::ceil(t1 / dt - 1e-9)));
        double value = 0.0;
        bool stuck = false;
        if (k1 > k0) {
            std::size_t last_outside = k1;  // sentinel: none
            for (std::size_t k = k0; k < k1; ++k)
                if (!inside(k)) last_outside = k;
            if (last_outside == k1) {
                value = 0.0;
            } else if (last_outside + 1 >= k1) {
                value = t1 - t0;  // never re-entered
                stuck = true;
            } else {
                value = traj.t[last_outside + 1] - t0;
            }
        }
        if (seg == 0) {
            result.settling_time_s = value;
        } else {
            result.recovery_time_s.push_back(value);
        }
        result.never_settled = result.never_settled || stuck;
    }
    return result;
}

MetricsReport compute_metrics(const Trajectory& traj, const Scenario& scenario,
                              const PerformanceSpec& spec) {
    const double v_ref = scenario.plant.v_ref;
    MetricsReport m;
    m.overshoot_pct = overshoot(traj, v_ref);
    m.chattering_tv = chattering(traj);

    const double dt = traj.t[1] - traj.t[0];
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double err = std::abs(v_ref - traj.v_c[k]);
        m.iae_volt_s += err * dt;
        m.itae += traj.t[k] * err * dt;
    }

    // Trailing 20% of each constant-load segment.
    double worst = 0.0;
    for (const auto& [begin, end] : segments(traj)) {
        const auto count = std::max<std::size_t>(1, (end - begin) / 5);
        double sum = 0.0;
        for (std::size_t k = end - count; k < end; ++k) sum += traj.v_c[k];
        worst = std::max(worst, std::abs(sum / count - v_ref));
    }
    m.sse_volts = worst;
    m.sse_pct = 100.0 * worst / v_ref;

    const SettlingResult settling =
        settling_recovery(traj, v_ref, spec.settling_band_pct, scenario.load_events);
    m.settling_time_s = settling.settling_time_s;
    m.recovery_time_s = settling.recovery_time_s;
    m.never_settled = settling.never_settled;
    return m;
}

MetricsReport diverged_metrics() {
    MetricsReport m;
    m.diverged = true;
    return m;
}

double performance_index(const MetricsReport& m, const WeightSet& weights,
                         const PerformanceSpec& spec) {
    if (m.diverged) return weights.j_divergence;
    double j = weights.w_overshoot * m.overshoot_pct + weights.w_sse * m.sse_volts +
               weights.w_chattering * m.chattering_tv + weights.w_iae * m.iae_volt_s;
    double slow = m.settling_time_s;
    for (double r : m.recovery_time_s) slow += r;
    j += weights.w_settling * slow;
    if (m.overshoot_pct >= spec.max_overshoot_pct) j += weights.penalty_per_violation;
    if (m.sse_pct >= spec.max_sse_pct) j += weights.penalty_per_violation;
    return j;
}

PerformanceFeedback make_feedback(const MetricsReport& metrics, double index_j,
                                  const PerformanceSpec& spec, int iteration) {
    PerformanceFeedback f;
    f.metrics = metrics;
    f.index_j = index_j;
    f.iteration = iteration;
    if (metrics.diverged) {
        f.spec_flags.insert(SpecFlag::Diverged);
    } else {
        if (metrics.overshoot_pct >= spec.max_overshoot_pct)
            f.spec_flags.insert(SpecFlag::OvershootExceeded);
        if (metrics.sse_pct >= spec.max_sse_pct) f.spec_flags.insert(SpecFlag::SseExceeded);
        if (metrics.chattering_tv > spec.chattering_threshold)
            f.spec_flags.insert(SpecFlag::ChatteringDetected);
        if (metrics.never_settled) f.spec_flags.insert(SpecFlag::SettlingSlow);
    }
    f.specs_met = !f.spec_flags.contains(SpecFlag::OvershootExceeded) &&
                  !f.spec_flags.contains(SpecFlag::SseExceeded) &&
                  !f.spec_flags.contains(SpecFlag::Diverged);
    return f;
}

json metrics_to_json(const MetricsReport& m) {
    return json{
        {"overshoot_pct", m.overshoot_pct},
        {"sse_volts", m.sse_volts},
        {"sse_pct", m.sse_pct},
        {"settling_time_s", m.settling_time_s},
        {"iae_volt_s", m.iae_volt_s},
        {"itae", m.itae},
        {"chattering_tv", m.chattering_tv},
        {"recovery_time_s", m.recovery_time_s},
        {"never_settled", m.never_settled},
        {"diverged", m.diverged},
    };
}

MetricsReport metrics_from_json(const json& doc) {
    MetricsReport m;
    m.overshoot_pct = doc.at("overshoot_pct").get<double>();
    m.sse_volts = doc.at("sse_volts").get<double>();
    m.sse_pct = doc.at("sse_pct").get<double>();
    m.settling_time_s = doc.at("settling_time_s").get<double>();
    m.iae_volt_s = doc.at("iae_volt_s").get<double>();
    m.itae = doc.at("itae").get<double>();
    m.chattering_tv = doc.at("chattering_tv").get<double>();
    m.recovery_time_s = doc.at("recovery_time_s").get<std::vector<double>>();
    m.never_settled = doc.at("never_settled").get<bool>();
    m.diverged = doc.at("diverged").get<bool>();
    return m;
}

json feedback_to_json(const PerformanceFeedback& f) {
    json flags = json::array();
    for (SpecFlag flag : f.spec_flags) flags.push_back(std::string(to_string(flag)));
    return json{
        {"metrics", metrics_to_json(f.metrics)},
        {"index_j", f.index_j},
        {"spec_flags", std::move(flags)},
        {"specs_met", f.specs_met},
        {"iteration", f.iteration},
    };
}

PerformanceFeedback feedback_from_json(const json& doc) {
    PerformanceFeedback f;
    f.metrics = metrics_from_json(doc.at("metrics"));
    f.index_j = doc.at("index_j").get<double>();
    for (const auto& name : doc.at("spec_flags")) f.spec_flags.insert(flag_from(name));
    f.specs_met = doc.at("specs_met").get<bool>();
    f.iteration = doc.at("iteration").get<int>();
    return f;
}

}  // namespace ctrlforge
