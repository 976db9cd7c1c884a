#include "ctrlforge/plant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace ctrlforge {

namespace {

constexpr double kDivergenceLimit = 1e6;

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

void PlantParams::check() const {
    require(v_in > 0, "plant.v_in must be positive");
    require(l > 0, "plant.l must be positive");
    require(c > 0, "plant.c must be positive");
    require(r_load_nominal > 0, "plant.r_load_nominal must be positive");
    require(f_sw > 0, "plant.f_sw must be positive");
    require(v_ref > 0, "plant.v_ref must be positive");
    require(v_ref > v_in, "plant.v_ref must exceed plant.v_in (boost operation)");
}

Scenario Scenario::nominal(const PlantParams& plant, double t_end) {
    Scenario s;
    s.plant = plant;
    s.t_end = t_end;
    s.initial_i_l = 0.0;
    s.initial_v_c = plant.v_in;
    return s;
}

void Scenario::check() const {
    plant.check();
    require(t_end > 0, "scenario.t_end must be positive");
    require(std::isfinite(initial_i_l) && initial_i_l >= 0,
            "scenario.initial_i_l must be finite and non-negative");
    require(std::isfinite(initial_v_c), "scenario.initial_v_c must be finite");
    double prev = -1.0;
    for (const auto& event : load_events) {
        require(event.r_load > 0, "scenario.load_events r_load must be positive");
        require(event.time >= 0 && event.time <= t_end,
                "scenario.load_events time must lie in [0, t_end]");
        require(event.time > prev, "scenario.load_events times must be strictly increasing");
        prev = event.time;
    }
}

double Scenario::load_at(double t) const {
    double r = plant.r_load_nominal;
    for (const auto& event : load_events) {
        if (t >= event.time) r = event.r_load;
        else break;
    }
    return r;
}

void SimConfig::check() const {
    require(control_dt > 0, "sim.control_dt must be positive");
    require(substeps >= 1, "sim.substeps must be at least 1");
    require(duty_min >= 0 && duty_min < duty_max && duty_max <= 1,
            "sim duty clamp must satisfy 0 <= duty_min < duty_max <= 1");
}

Derivatives derivatives(const PlantState& state, double duty, double r_load,
                        const PlantParams& plant) {
    const double off = 1.0 - duty;
    return {
        (plant.v_in - off * state.v_c) / plant.l,
        (off * state.i_l - state.v_c / r_load) / plant.c,
    };
}

PlantState step(const PlantState& state, double duty, double r_load, double dt,
                const PlantParams& plant) {
    const auto f = [&](double i, double v) {
        return derivatives({i, v, 0.0}, duty, r_load, plant);
    };
    const Derivatives k1 = f(state.i_l, state.v_c);
    const Derivatives k2 = f(state.i_l + 0.5 * dt * k1.di_l_dt, state.v_c + 0.5 * dt * k1.dv_c_dt);
    const Derivatives k3 = f(state.i_l + 0.5 * dt * k2.di_l_dt, state.v_c + 0.5 * dt * k2.dv_c_dt);
    const Derivatives k4 = f(state.i_l + dt * k3.di_l_dt, state.v_c + dt * k3.dv_c_dt);

    PlantState next;
    next.i_l = state.i_l +
               dt / 6.0 * (k1.di_l_dt + 2.0 * k2.di_l_dt + 2.0 * k3.di_l_dt + k4.di_l_dt);
    next.v_c = state.v_c +
               dt / 6.0 * (k1.dv_c_dt + 2.0 * k2.dv_c_dt + 2.0 * k3.dv_c_dt + k4.dv_c_dt);
    next.t = state.t + dt;

    // Diode guard: the inductor current cannot reverse.
    if (next.i_l < 0.0) next.i_l = 0.0;

    if (!std::isfinite(next.i_l) || !std::isfinite(next.v_c) ||
        std::abs(next.i_l) > kDivergenceLimit || std::abs(next.v_c) > kDivergenceLimit) {
        std::ostringstream os;
        os << "simulation diverged at t=" << next.t << " (i_l=" << next.i_l
           << ", v_c=" << next.v_c << ")";
        throw SimulationDiverged(os.str());
    }
    return next;
}

Trajectory simulate(const ControlLaw& law, const Scenario& scenario, const SimConfig& cfg) {
    scenario.check();
    cfg.check();

    const long periods = std::lround(scenario.t_end / cfg.control_dt);
    require(periods >= 1, "scenario.t_end must cover at least one control period");
    const double sub_dt = cfg.control_dt / cfg.substeps;

    Trajectory traj;
    traj.t.reserve(periods);
    traj.v_c.reserve(periods);
    traj.i_l.reserve(periods);
    traj.duty.reserve(periods);
    traj.r_load.reserve(periods);
    traj.v_ref.reserve(periods);

    PlantState state{scenario.initial_i_l, scenario.initial_v_c, 0.0};
    double prev_duty = cfg.duty_min;

    for (long k = 0; k < periods; ++k) {
        const double t = k * cfg.control_dt;
        const double r_load = scenario.load_at(t);

        ControlSignals signals;
        signals.error = scenario.plant.v_ref - state.v_c;
        signals.v_c = state.v_c;
        signals.i_l = state.i_l;
        signals.v_ref = scenario.plant.v_ref;
        signals.prev_duty = prev_duty;

        const double duty = std::clamp(law(signals, cfg.control_dt), cfg.duty_min, cfg.duty_max);

        traj.t.push_back(t);
        traj.v_c.push_back(state.v_c);
        traj.i_l.push_back(state.i_l);
        traj.duty.push_back(duty);
        traj.r_load.push_back(r_load);
        traj.v_ref.push_back(scenario.plant.v_ref);

        for (int i = 0; i < cfg.substeps; ++i)
            state = step(state, duty, r_load, sub_dt, scenario.plant);
        state.t = (k + 1) * cfg.control_dt;  // keep sample times exact
        prev_duty = duty;
    }
    return traj;
}

Trajectory simulate(const ControllerStructure& controller, const ParamVector& theta,
                    const Scenario& scenario, const SimConfig& cfg) {
    const int expected = param_dimension(controller);
    if (static_cast<int>(theta.size()) != expected) {
        std::ostringstream os;
        os << "expected d_theta=" << expected << ", got " << theta.size();
        throw ValidationError(os.str());
    }
    InterpreterState istate = make_state(controller);
    const auto law = [&](const ControlSignals& signals, double dt) {
        return eval_control(controller, theta, signals, istate, dt);
    };
    return simulate(law, scenario, cfg);
}

std::string format_sig9(double x) {
    if (x == 0.0) return "0";
    if (!std::isfinite(x)) throw ConfigError("cannot format non-finite value");
    const int magnitude = static_cast<int>(std::floor(std::log10(std::abs(x))));
    const int decimals = std::max(0, 8 - magnitude);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
    return buf;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << "t,v_c,i_l,duty,r_load,v_ref\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << format_sig9(traj.t[k]) << ',' << format_sig9(traj.v_c[k]) << ','
            << format_sig9(traj.i_l[k]) << ',' << format_sig9(traj.duty[k]) << ','
            << format_sig9(traj.r_load[k]) << ',' << format_sig9(traj.v_ref[k]) << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "t,v_c,i_l,duty,r_load,v_ref")
        throw ParseError("bad trajectory CSV header");
    Trajectory traj;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double cols[6];
        std::istringstream row(line);
        std::string cell;
        for (int c = 0; c < 6; ++c) {
            if (!std::getline(row, cell, ','))
                throw ParseError("trajectory CSV row too short", line_no);
            cols[c] = std::strtod(cell.c_str(), nullptr);
        }
        traj.t.push_back(cols[0]);
        traj.v_c.push_back(cols[1]);
        traj.i_l.push_back(cols[2]);
        traj.duty.push_back(cols[3]);
        traj.r_load.push_back(cols[4]);
        traj.v_ref.push_back(cols[5]);
    }
    return traj;
}

}  // namespace ctrlforge
