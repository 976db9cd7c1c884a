// ctrlforge: autonomous controller synthesis for a simulated boost converter.
//   run       evolve a controller against a problem config
//   simulate  one closed-loop run of a structure file
//   replay    regenerate the report from a session log

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ctrlforge/config.hpp"
#include "ctrlforge/report.hpp"
#include "ctrlforge/serialization.hpp"

namespace fs = std::filesystem;
using namespace ctrlforge;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

int cmd_run(const std::string& config_path, const std::string& seed_override,
            const std::string& mode_override, const std::string& out_override) {
    RunConfig cfg = load_run_config(config_path);
    if (!seed_override.empty()) cfg.problem.session.seed = std::stoull(seed_override);
    if (!mode_override.empty()) cfg.problem.session.mode = proposer_mode_from(mode_override);
    if (!out_override.empty()) cfg.out_dir = out_override;

    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);

    const DesignSession session = run_session(cfg.problem);

    write_file(out_dir / "session.json", session_to_json(session).dump(2) + "\n");
    const nlohmann::json report = make_report(session);
    write_file(out_dir / "report.json", report.dump(2) + "\n");
    write_file(out_dir / "convergence.csv", convergence_csv(session));

    const Trajectory final_traj =
        simulate(session.best_structure, session.best_theta, cfg.problem.scenario, cfg.problem.sim);
    std::ostringstream csv;
    write_trajectory_csv(final_traj, csv);
    write_file(out_dir / "final_trajectory.csv", csv.str());

    if (cfg.verbosity > 0) {
        std::cout << report_text(report);
        double total = 0.0;
        for (const auto& it : session.iterations) total += it.wall_seconds;
        std::cerr << "phase wall-clock:";
        for (const auto& it : session.iterations)
            std::cerr << " k" << it.k << "=" << it.wall_seconds << "s";
        std::cerr << " total=" << total << "s\n";
    }
    return session.termination == TerminationReason::SpecsMet ? 0 : 1;
}

int cmd_simulate(const std::string& structure_path, const std::string& theta_csv,
                 const std::string& scenario_path, const std::string& out_dir_arg) {
    const ControllerStructure structure = deserialize(read_file(structure_path));
    ParamVector theta;
    std::istringstream list(theta_csv);
    std::string item;
    while (std::getline(list, item, ','))
        if (!item.empty()) theta.push_back(std::stod(item));

    const ScenarioConfig cfg = load_scenario_config(scenario_path);
    const Trajectory traj = simulate(structure, theta, cfg.scenario, cfg.sim);

    const PerformanceSpec spec;
    const MetricsReport metrics = compute_metrics(traj, cfg.scenario, spec);
    const double j = performance_index(metrics, WeightSet{}, spec);
    const PerformanceFeedback feedback = make_feedback(metrics, j, spec, 0);

    const fs::path out_dir(out_dir_arg);
    fs::create_directories(out_dir);
    std::ostringstream csv;
    write_trajectory_csv(traj, csv);
    write_file(out_dir / "trajectory.csv", csv.str());
    write_file(out_dir / "metrics.json", feedback_to_json(feedback).dump(2) + "\n");
    std::cout << feedback_to_json(feedback).dump(2) << "\n";
    return 0;
}

int cmd_replay(const std::string& log_path, const std::string& out_dir_arg) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(log_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("session log: ") + e.what(), e.byte);
    }
    const DesignSession session = session_from_json(doc);

    const fs::path out_dir(out_dir_arg);
    fs::create_directories(out_dir);
    const nlohmann::json report = make_report(session);
    write_file(out_dir / "report.json", report.dump(2) + "\n");
    write_file(out_dir / "convergence.csv", convergence_csv(session));
    std::cout << report_text(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"controller synthesis for a simulated DC-DC boost converter"};
    app.require_subcommand(1);

    std::string config_path, seed_override, mode_override, out_override;
    auto* run = app.add_subcommand("run", "run a design session");
    run->add_option("--config", config_path, "problem config file")->required();
    run->add_option("--seed", seed_override, "override session.seed");
    run->add_option("--mode", mode_override, "override session.mode (rules|llm|llm-fallback)");
    run->add_option("--out", out_override, "output directory");

    std::string structure_path, theta_csv, scenario_path, sim_out = ".";
    auto* sim = app.add_subcommand("simulate", "simulate one controller");
    sim->add_option("--structure", structure_path, "structure JSON file")->required();
    sim->add_option("--theta", theta_csv, "comma-separated parameter values")->required();
    sim->add_option("--scenario", scenario_path, "scenario config file")->required();
    sim->add_option("--out", sim_out, "output directory");

    std::string log_path, replay_out = ".";
    auto* replay = app.add_subcommand("replay", "regenerate a report from a session log");
    replay->add_option("--log", log_path, "session log file")->required();
    replay->add_option("--out", replay_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed_override, mode_override, out_override);
        if (sim->parsed()) return cmd_simulate(structure_path, theta_csv, scenario_path, sim_out);
        return cmd_replay(log_path, replay_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
}
