#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctrlforge/controller.hpp"
#include "ctrlforge/errors.hpp"

namespace ctrlforge {

// Averaged continuous-conduction model of a DC-DC boost converter.
struct PlantParams {
    double v_in = 50.0;            // V
    double l = 1e-3;               // H
    double c = 1100e-6;            // F
    double r_load_nominal = 50.0;  // ohm
    double f_sw = 20e3;            // Hz
    double v_ref = 100.0;          // V

    void check() const;
};

struct LoadEvent {
    double time = 0.0;    // s
    double r_load = 0.0;  // ohm

    bool operator==(const LoadEvent&) const = default;
};

struct Scenario {
    PlantParams plant;
    std::vector<LoadEvent> load_events;  // strictly increasing times in [0, t_end]
    double t_end = 1.0;
    double initial_i_l = 0.0;
    // Cold start from input-voltage precharge; set alongside plant.
    double initial_v_c = 50.0;

    static Scenario nominal(const PlantParams& plant, double t_end = 1.0);
    void check() const;
    double load_at(double t) const;
};

struct SimConfig {
    double control_dt = 50e-6;  // one controller update per switching period
    int substeps = 10;          // integration dt = control_dt / substeps
    double duty_min = 0.02;
    double duty_max = 0.95;

    void check() const;
};

struct PlantState {
    double i_l = 0.0;
    double v_c = 0.0;
    double t = 0.0;
};

// Uniformly sampled closed-loop record, one row per control period.
struct Trajectory {
    std::vector<double> t;
    std::vector<double> v_c;
    std::vector<double> i_l;
    std::vector<double> duty;
    std::vector<double> r_load;
    std::vector<double> v_ref;

    std::size_t size() const { return t.size(); }
};

struct Derivatives {
    double di_l_dt = 0.0;
    double dv_c_dt = 0.0;
};

// Averaged CCM model:
//   di_l/dt = (v_in - (1-d)*v_c) / L
//   dv_c/dt = ((1-d)*i_l - v_c/R) / C
Derivatives derivatives(const PlantState& state, double duty, double r_load,
                        const PlantParams& plant);

// One RK4 step with the diode guard (i_l clamped at zero). Throws
// SimulationDiverged when the state leaves the finite/bounded region.
PlantState step(const PlantState& state, double duty, double r_load, double dt,
                const PlantParams& plant);

// Duty command for the coming control period, given current measurements.
using ControlLaw = std::function<double(const ControlSignals& signals, double dt)>;

Trajectory simulate(const ControlLaw& law, const Scenario& scenario, const SimConfig& cfg);
Trajectory simulate(const ControllerStructure& controller, const ParamVector& theta,
                    const Scenario& scenario, const SimConfig& cfg);

// CSV trajectory exchange: header t,v_c,i_l,duty,r_load,v_ref, decimal
// notation, 9 significant digits.
std::string format_sig9(double x);
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace ctrlforge
