#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctrlforge/metrics.hpp"
#include "ctrlforge/orchestrator.hpp"
#include "ctrlforge/plant.hpp"
#include "ctrlforge/pso.hpp"
#include "ctrlforge/report.hpp"
#include "ctrlforge/serialization.hpp"
#include "ctrlforge/templates.hpp"

namespace py = pybind11;
using namespace ctrlforge;

PYBIND11_MODULE(_core, m) {
    m.doc() = "controller synthesis for a simulated DC-DC boost converter";

    py::register_exception<Error>(m, "CtrlforgeError");

    py::class_<PlantParams>(m, "PlantParams")
        .def(py::init<>())
        .def_readwrite("v_in", &PlantParams::v_in)
        .def_readwrite("l", &PlantParams::l)
        .def_readwrite("c", &PlantParams::c)
        .def_readwrite("r_load_nominal", &PlantParams::r_load_nominal)
        .def_readwrite("f_sw", &PlantParams::f_sw)
        .def_readwrite("v_ref", &PlantParams::v_ref);

    py::class_<LoadEvent>(m, "LoadEvent")
        .def(py::init<double, double>(), py::arg("time"), py::arg("r_load"))
        .def_readwrite("time", &LoadEvent::time)
        .def_readwrite("r_load", &LoadEvent::r_load);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_static("nominal", &Scenario::nominal, py::arg("plant"), py::arg("t_end") = 1.0)
        .def_readwrite("plant", &Scenario::plant)
        .def_readwrite("load_events", &Scenario::load_events)
        .def_readwrite("t_end", &Scenario::t_end)
        .def_readwrite("initial_i_l", &Scenario::initial_i_l)
        .def_readwrite("initial_v_c", &Scenario::initial_v_c);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("control_dt", &SimConfig::control_dt)
        .def_readwrite("substeps", &SimConfig::substeps)
        .def_readwrite("duty_min", &SimConfig::duty_min)
        .def_readwrite("duty_max", &SimConfig::duty_max);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("t", &Trajectory::t)
        .def_readonly("v_c", &Trajectory::v_c)
        .def_readonly("i_l", &Trajectory::i_l)
        .def_readonly("duty", &Trajectory::duty)
        .def_readonly("r_load", &Trajectory::r_load)
        .def_readonly("v_ref", &Trajectory::v_ref)
        .def("__len__", &Trajectory::size);

    py::class_<ControllerStructure>(m, "ControllerStructure")
        .def_readonly("name", &ControllerStructure::name)
        .def("__eq__", [](const ControllerStructure& a, const ControllerStructure& b) {
            return a == b;
        });

    py::class_<ParamBounds>(m, "ParamBounds")
        .def_readonly("lower", &ParamBounds::lower)
        .def_readonly("upper", &ParamBounds::upper);

    py::class_<ParamSpace>(m, "ParamSpace")
        .def(py::init<>())
        .def_readwrite("bounds", &ParamSpace::bounds)
        .def("dimension", &ParamSpace::dimension)
        .def_static("from_bounds", [](const std::vector<std::pair<double, double>>& pairs) {
            ParamSpace space;
            for (const auto& [lo, hi] : pairs) space.bounds.push_back({lo, hi});
            return space;
        });

    m.def("make_template", [](const std::string& name) {
        auto t = make_template(name);
        return py::make_tuple(t.structure, t.space);
    });
    m.def("template_names", &template_names);
    m.def("validate", [](const ControllerStructure& s) { return validate(s); });
    m.def("param_dimension", &param_dimension);
    m.def("serialize", &serialize);
    m.def("deserialize", &deserialize);

    m.def("simulate",
          [](const ControllerStructure& s, const ParamVector& theta, const Scenario& scenario,
             const SimConfig& cfg) { return simulate(s, theta, scenario, cfg); },
          py::arg("structure"), py::arg("theta"), py::arg("scenario"),
          py::arg("sim") = SimConfig{}, py::call_guard<py::gil_scoped_release>());
    m.def("trajectory_csv", [](const Trajectory& traj) {
        std::ostringstream out;
        write_trajectory_csv(traj, out);
        return out.str();
    });

    py::class_<PerformanceSpec>(m, "PerformanceSpec")
        .def(py::init<>())
        .def_readwrite("max_overshoot_pct", &PerformanceSpec::max_overshoot_pct)
        .def_readwrite("max_sse_pct", &PerformanceSpec::max_sse_pct)
        .def_readwrite("settling_band_pct", &PerformanceSpec::settling_band_pct)
        .def_readwrite("chattering_threshold", &PerformanceSpec::chattering_threshold);

    py::class_<WeightSet>(m, "WeightSet")
        .def(py::init<>())
        .def_readwrite("w_overshoot", &WeightSet::w_overshoot)
        .def_readwrite("w_sse", &WeightSet::w_sse)
        .def_readwrite("w_settling", &WeightSet::w_settling)
        .def_readwrite("w_chattering", &WeightSet::w_chattering)
        .def_readwrite("w_iae", &WeightSet::w_iae)
        .def_readwrite("penalty_per_violation", &WeightSet::penalty_per_violation)
        .def_readwrite("j_divergence", &WeightSet::j_divergence);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("overshoot_pct", &MetricsReport::overshoot_pct)
        .def_readonly("sse_volts", &MetricsReport::sse_volts)
        .def_readonly("sse_pct", &MetricsReport::sse_pct)
        .def_readonly("settling_time_s", &MetricsReport::settling_time_s)
        .def_readonly("iae_volt_s", &MetricsReport::iae_volt_s)
        .def_readonly("itae", &MetricsReport::itae)
        .def_readonly("chattering_tv", &MetricsReport::chattering_tv)
        .def_readonly("recovery_time_s", &MetricsReport::recovery_time_s)
        .def_readonly("diverged", &MetricsReport::diverged);

    m.def("compute_metrics", &compute_metrics, py::arg("trajectory"), py::arg("scenario"),
          py::arg("spec") = PerformanceSpec{});
    m.def("performance_index", &performance_index, py::arg("metrics"),
          py::arg("weights") = WeightSet{}, py::arg("spec") = PerformanceSpec{});

    py::class_<PsoConfig>(m, "PsoConfig")
        .def(py::init<>())
        .def_readwrite("swarm_size", &PsoConfig::swarm_size)
        .def_readwrite("max_iters", &PsoConfig::max_iters)
        .def_readwrite("inertia_start", &PsoConfig::inertia_start)
        .def_readwrite("inertia_end", &PsoConfig::inertia_end)
        .def_readwrite("cognitive_c1", &PsoConfig::cognitive_c1)
        .def_readwrite("social_c2", &PsoConfig::social_c2)
        .def_readwrite("velocity_clamp_frac", &PsoConfig::velocity_clamp_frac)
        .def_readwrite("seed", &PsoConfig::seed)
        .def_readwrite("workers", &PsoConfig::workers);

    py::class_<PsoResult>(m, "PsoResult")
        .def_readonly("best_theta", &PsoResult::best_theta)
        .def_readonly("best_fitness", &PsoResult::best_fitness)
        .def_readonly("history", &PsoResult::history)
        .def_readonly("evaluations", &PsoResult::evaluations);

    // Python fitness callbacks hold the GIL, so the swarm runs sequentially.
    m.def("pso_optimize", [](const std::function<double(ParamVector)>& fitness,
                             const ParamSpace& space, PsoConfig cfg) {
        cfg.workers = 1;
        return optimize([&](const ParamVector& x) { return fitness(x); }, space, cfg);
    });

    py::class_<SessionConfig>(m, "SessionConfig")
        .def(py::init<>())
        .def_readwrite("k_max", &SessionConfig::k_max)
        .def_readwrite("seed", &SessionConfig::seed);

    py::class_<DesignProblem>(m, "DesignProblem")
        .def(py::init<>())
        .def_readwrite("plant", &DesignProblem::plant)
        .def_readwrite("scenario", &DesignProblem::scenario)
        .def_readwrite("spec", &DesignProblem::spec)
        .def_readwrite("weights", &DesignProblem::weights)
        .def_readwrite("sim", &DesignProblem::sim)
        .def_readwrite("pso", &DesignProblem::pso)
        .def_readwrite("session", &DesignProblem::session)
        .def_readwrite("initial_template", &DesignProblem::initial_template);

    py::class_<DesignSession>(m, "DesignSession")
        .def_readonly("best_structure", &DesignSession::best_structure)
        .def_readonly("best_theta", &DesignSession::best_theta)
        .def_readonly("best_j", &DesignSession::best_j)
        .def_property_readonly("termination",
                               [](const DesignSession& s) {
                                   return std::string(to_string(s.termination));
                               })
        .def_property_readonly("iterations", [](const DesignSession& s) {
            return s.iterations.size();
        });

    // Rules mode only from python; the GIL is released for the whole run.
    m.def("run_session",
          [](const DesignProblem& problem) { return run_session(problem); },
          py::call_guard<py::gil_scoped_release>());
    m.def("session_json", [](const DesignSession& s) { return session_to_json(s).dump(2); });
    m.def("report_json", [](const DesignSession& s) { return make_report(s).dump(2); });
}
