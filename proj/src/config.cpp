#include "ctrlforge/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace ctrlforge {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

class Reader {
public:
    explicit Reader(const IniData& ini) : ini_(ini) {}

    double number(const std::string& section, const std::string& key, double fallback) {
        const std::string* raw = find(section, key);
        if (!raw) return fallback;
        char* end = nullptr;
        const double value = std::strtod(raw->c_str(), &end);
        if (end == raw->c_str() || *end != '\0')
            throw ConfigError(section + "." + key + ": not a number ('" + *raw + "')");
        return value;
    }

    long integer(const std::string& section, const std::string& key, long fallback) {
        const double v = number(section, key, static_cast<double>(fallback));
        const long rounded = std::lround(v);
        if (static_cast<double>(rounded) != v)
            throw ConfigError(section + "." + key + ": expected an integer");
        return rounded;
    }

    std::string text(const std::string& section, const std::string& key,
                     const std::string& fallback) {
        const std::string* raw = find(section, key);
        return raw ? *raw : fallback;
    }

    bool has(const std::string& section, const std::string& key) {
        return find(section, key) != nullptr;
    }

    // Every key must have been consumed by one of the getters above.
    void check_consumed() const {
        for (const auto& [section, entries] : ini_)
            for (const auto& [key, value] : entries)
                if (!consumed_.contains(section + "." + key))
                    throw ConfigError("unknown config key '" + key + "' in section [" + section +
                                      "]");
    }

private:
    const std::string* find(const std::string& section, const std::string& key) {
        consumed_.insert(section + "." + key);
        const auto sec = ini_.find(section);
        if (sec == ini_.end()) return nullptr;
        const auto it = sec->second.find(key);
        return it == sec->second.end() ? nullptr : &it->second;
    }

    const IniData& ini_;
    std::set<std::string> consumed_;
};

std::vector<LoadEvent> parse_events(const std::string& raw) {
    // "0.25:100, 0.5:50" -> events at those times/loads
    std::vector<LoadEvent> events;
    std::istringstream list(raw);
    std::string item;
    while (std::getline(list, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("scenario.load_events entries must look like time:ohms (got '" +
                              item + "')");
        try {
            events.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
        } catch (const std::exception&) {
            throw ConfigError("scenario.load_events: bad number in '" + item + "'");
        }
    }
    return events;
}

void read_plant_scenario_sim(Reader& reader, Scenario& scenario, SimConfig& sim) {
    PlantParams& plant = scenario.plant;
    plant.v_in = reader.number("plant", "v_in", plant.v_in);
    plant.l = reader.number("plant", "l", plant.l);
    plant.c = reader.number("plant", "c", plant.c);
    plant.r_load_nominal = reader.number("plant", "r_load_nominal", plant.r_load_nominal);
    plant.f_sw = reader.number("plant", "f_sw", plant.f_sw);
    plant.v_ref = reader.number("plant", "v_ref", plant.v_ref);

    scenario.t_end = reader.number("scenario", "t_end", scenario.t_end);
    scenario.initial_i_l = reader.number("scenario", "initial_i_l", 0.0);
    scenario.initial_v_c = reader.number("scenario", "initial_v_c", plant.v_in);
    if (reader.has("scenario", "load_events"))
        scenario.load_events = parse_events(reader.text("scenario", "load_events", ""));

    sim.control_dt = reader.number("sim", "control_dt", 1.0 / plant.f_sw);
    sim.substeps = static_cast<int>(reader.integer("sim", "substeps", sim.substeps));
    sim.duty_min = reader.number("sim", "duty_min", sim.duty_min);
    sim.duty_max = reader.number("sim", "duty_max", sim.duty_max);
}

}  // namespace

IniData parse_ini(const std::string& text) {
    IniData data;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            data[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        data[section][key] = value;
    }
    return data;
}

RunConfig run_config_from_ini(const IniData& ini) {
    Reader reader(ini);
    RunConfig cfg;
    DesignProblem& p = cfg.problem;

    read_plant_scenario_sim(reader, p.scenario, p.sim);
    p.plant = p.scenario.plant;

    p.spec.max_overshoot_pct = reader.number("spec", "max_overshoot_pct", p.spec.max_overshoot_pct);
    p.spec.max_sse_pct = reader.number("spec", "max_sse_pct", p.spec.max_sse_pct);
    p.spec.settling_band_pct = reader.number("spec", "settling_band_pct", p.spec.settling_band_pct);
    p.spec.chattering_threshold =
        reader.number("spec", "chattering_threshold", p.spec.chattering_threshold);

    p.weights.w_overshoot = reader.number("weights", "w_overshoot", p.weights.w_overshoot);
    p.weights.w_sse = reader.number("weights", "w_sse", p.weights.w_sse);
    p.weights.w_settling = reader.number("weights", "w_settling", p.weights.w_settling);
    p.weights.w_chattering = reader.number("weights", "w_chattering", p.weights.w_chattering);
    p.weights.w_iae = reader.number("weights", "w_iae", p.weights.w_iae);
    p.weights.penalty_per_violation =
        reader.number("weights", "penalty_per_violation", p.weights.penalty_per_violation);
    p.weights.j_divergence = reader.number("weights", "j_divergence", p.weights.j_divergence);

    p.pso.swarm_size = static_cast<int>(reader.integer("pso", "swarm_size", p.pso.swarm_size));
    p.pso.max_iters = static_cast<int>(reader.integer("pso", "max_iters", p.pso.max_iters));
    p.pso.inertia_start = reader.number("pso", "inertia_start", p.pso.inertia_start);
    p.pso.inertia_end = reader.number("pso", "inertia_end", p.pso.inertia_end);
    p.pso.cognitive_c1 = reader.number("pso", "cognitive_c1", p.pso.cognitive_c1);
    p.pso.social_c2 = reader.number("pso", "social_c2", p.pso.social_c2);
    p.pso.velocity_clamp_frac =
        reader.number("pso", "velocity_clamp_frac", p.pso.velocity_clamp_frac);
    p.pso.early_stop.patience =
        static_cast<int>(reader.integer("pso", "early_stop_patience", p.pso.early_stop.patience));
    p.pso.early_stop.min_rel_improvement = reader.number("pso", "early_stop_rel_improvement",
                                                         p.pso.early_stop.min_rel_improvement);
    p.pso.workers = static_cast<int>(reader.integer("pso", "workers", p.pso.workers));
    p.pso.error_penalty = reader.number("pso", "error_penalty", p.weights.j_divergence);
    p.pso.restarts = static_cast<int>(reader.integer("pso", "restarts", p.pso.restarts));

    p.session.k_max = static_cast<int>(reader.integer("session", "k_max", p.session.k_max));
    p.session.stagnation_patience = static_cast<int>(
        reader.integer("session", "stagnation_patience", p.session.stagnation_patience));
    p.session.stagnation_rel_improvement = reader.number(
        "session", "stagnation_rel_improvement", p.session.stagnation_rel_improvement);
    p.session.seed = static_cast<std::uint64_t>(reader.integer("session", "seed", 0));
    p.session.mode = proposer_mode_from(reader.text("session", "mode", "rules"));
    p.initial_template = reader.text("session", "initial_template", p.initial_template);

    p.llm.endpoint = reader.text("llm", "endpoint", p.llm.endpoint);
    p.llm.model = reader.text("llm", "model", p.llm.model);
    p.llm.auth_env = reader.text("llm", "auth_env", p.llm.auth_env);
    p.llm.temperature = reader.number("llm", "temperature", p.llm.temperature);
    p.llm.max_retries = static_cast<int>(reader.integer("llm", "max_retries", p.llm.max_retries));
    p.llm.timeout_s = reader.number("llm", "timeout_s", p.llm.timeout_s);
    p.llm.backoff_ms = static_cast<int>(reader.integer("llm", "backoff_ms", p.llm.backoff_ms));

    p.prompt_dir = reader.text("paths", "prompt_dir", "");
    cfg.out_dir = reader.text("output", "dir", cfg.out_dir);
    cfg.verbosity = static_cast<int>(reader.integer("output", "verbosity", cfg.verbosity));

    reader.check_consumed();
    p.check();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return run_config_from_ini(parse_ini(text.str()));
}

ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    const IniData ini = parse_ini(text.str());
    for (const auto& [section, keys] : ini)
        if (section != "plant" && section != "scenario" && section != "sim")
            throw ConfigError("scenario files only take [plant], [scenario], [sim] (got [" +
                              section + "])");
    Reader reader(ini);
    ScenarioConfig cfg;
    read_plant_scenario_sim(reader, cfg.scenario, cfg.sim);
    reader.check_consumed();
    cfg.scenario.check();
    cfg.sim.check();
    return cfg;
}

}  // namespace ctrlforge
