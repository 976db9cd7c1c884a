#include "ctrlforge/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ctrlforge/rng.hpp"
#include "ctrlforge/serialization.hpp"
#include "ctrlforge/templates.hpp"

namespace ctrlforge {

using nlohmann::json;

std::string_view to_string(ProposerMode mode) {
    switch (mode) {
        case ProposerMode::Rules: return "rules";
        case ProposerMode::Llm: return "llm";
        case ProposerMode::LlmWithFallback: return "llm-fallback";
    }
    return "rules";
}

ProposerMode proposer_mode_from(const std::string& name) {
    if (name == "rules") return ProposerMode::Rules;
    if (name == "llm") return ProposerMode::Llm;
    if (name == "llm-fallback" || name == "llm-with-fallback") return ProposerMode::LlmWithFallback;
    throw ConfigError("session.mode must be rules, llm, or llm-fallback (got '" + name + "')");
}

std::string_view to_string(TerminationReason reason) {
    switch (reason) {
        case TerminationReason::SpecsMet: return "specs_met";
        case TerminationReason::KMax: return "k_max";
        case TerminationReason::Stagnation: return "stagnation";
    }
    return "k_max";
}

TerminationReason termination_from(const std::string& name) {
    if (name == "specs_met") return TerminationReason::SpecsMet;
    if (name == "k_max") return TerminationReason::KMax;
    if (name == "stagnation") return TerminationReason::Stagnation;
    throw ParseError("unknown termination reason '" + name + "'");
}

void SessionConfig::check() const {
    if (k_max < 1) throw ConfigError("session.k_max must be at least 1");
    if (stagnation_patience < 1) throw ConfigError("session.stagnation_patience must be >= 1");
    if (stagnation_rel_improvement < 0)
        throw ConfigError("session.stagnation_rel_improvement must be non-negative");
}

void DesignProblem::check() const {
    plant.check();
    scenario.check();
    spec.check();
    weights.check();
    sim.check();
    pso.check();
    session.check();
    if (session.mode != ProposerMode::Rules) llm.check();
    make_template(initial_template);  // throws on unknown names
}

FitnessFn make_fitness(const ControllerStructure& structure, const DesignProblem& problem) {
    // Copies keep the closure self-contained for concurrent calls.
    return [structure, scenario = problem.scenario, sim = problem.sim, spec = problem.spec,
            weights = problem.weights](const ParamVector& theta) {
        try {
            const Trajectory traj = simulate(structure, theta, scenario, sim);
            return performance_index(compute_metrics(traj, scenario, spec), weights, spec);
        } catch (const SimulationDiverged&) {
            return weights.j_divergence;
        } catch (const InterpreterOverflow&) {
            return weights.j_divergence;
        }
    };
}

CandidateResult evaluate_candidate(const ControllerStructure& structure, const ParamSpace& space,
                                   const DesignProblem& problem, int iteration) {
    const auto violations = validate(structure);
    if (!violations.empty())
        throw ValidationError("candidate structure invalid: " + violations.front());
    if (static_cast<int>(space.dimension()) != param_dimension(structure))
        throw ConfigError("parameter space dimension does not match the structure");

    const FitnessFn fitness = make_fitness(structure, problem);

    CandidateResult result;
    if (space.dimension() == 0) {
        const double f = fitness({});
        result.pso.best_fitness = f;
        result.pso.history = {f};
        result.pso.evaluations = 1;
    } else {
        // Independent restarts with per-(iteration, restart) seeds; the best
        // run wins. The landscape has narrow funnels next to broad flat
        // basins, so single-swarm success is seed-dependent.
        long total_evaluations = 0;
        for (int restart = 0; restart < problem.pso.restarts; ++restart) {
            PsoConfig pso = problem.pso;
            pso.seed = CounterRng::key(problem.session.seed,
                                       0x50534f + static_cast<std::uint64_t>(restart), iteration);
            PsoResult run = optimize(fitness, space, pso);
            total_evaluations += run.evaluations;
            if (restart == 0 || run.best_fitness < result.pso.best_fitness)
                result.pso = std::move(run);
        }
        result.pso.evaluations = total_evaluations;
    }
    result.theta = result.pso.best_theta;

    MetricsReport metrics;
    try {
        const Trajectory traj = simulate(structure, result.theta, problem.scenario, problem.sim);
        metrics = compute_metrics(traj, problem.scenario, problem.spec);
    } catch (const SimulationDiverged&) {
        metrics = diverged_metrics();
    } catch (const InterpreterOverflow&) {
        metrics = diverged_metrics();
    }
    const double j = performance_index(metrics, problem.weights, problem.spec);
    result.feedback = make_feedback(metrics, j, problem.spec, iteration);
    return result;
}

std::optional<TerminationReason> check_termination(const ProposerState& state,
                                                   const SessionConfig& cfg) {
    if (!state.feedback_history.empty() && state.feedback_history.back().specs_met)
        return TerminationReason::SpecsMet;
    if (state.iteration >= cfg.k_max) return TerminationReason::KMax;
    std::vector<double> j_history;
    for (const auto& f : state.feedback_history) j_history.push_back(f.index_j);
    if (stagnation_count(j_history, cfg.stagnation_rel_improvement) >= cfg.stagnation_patience)
        return TerminationReason::Stagnation;
    return std::nullopt;
}

namespace {

ProposerState build_state(const DesignSession& session, const DesignProblem& problem) {
    ProposerState state;
    const IterationRecord& latest = session.iterations.back();
    state.iteration = latest.k;
    state.spec = problem.spec;
    state.plant = problem.plant;
    state.current_structure = latest.structure;
    state.current_theta = latest.theta;
    state.current_space = latest.space;
    for (const auto& it : session.iterations) state.feedback_history.push_back(it.feedback);
    state.best_structure = session.best_structure;
    state.best_theta = session.best_theta;
    state.best_space = session.iterations[session.best_iteration].space;
    state.best_j = session.best_j;
    for (const auto& it : session.iterations) {
        const auto& names = template_names();
        if (std::find(names.begin(), names.end(), it.structure.name) != names.end())
            state.tried_templates.push_back(it.structure.name);
    }
    return state;
}

}  // namespace

DesignSession run_session(const DesignProblem& problem, Proposer* proposer) {
    problem.check();

    std::unique_ptr<Proposer> owned;
    if (!proposer) {
        switch (problem.session.mode) {
            case ProposerMode::Rules:
                owned = std::make_unique<RuleBasedProposer>(problem.session.stagnation_patience,
                                                            problem.session.stagnation_rel_improvement);
                break;
            case ProposerMode::Llm:
            case ProposerMode::LlmWithFallback: {
                TemplateLibrary lib = problem.prompt_dir.empty()
                                          ? TemplateLibrary::builtin()
                                          : TemplateLibrary::load_dir(problem.prompt_dir);
                owned = std::make_unique<LlmProposer>(
                    problem.llm, std::move(lib),
                    problem.session.mode == ProposerMode::LlmWithFallback);
                break;
            }
        }
        proposer = owned.get();
    }

    DesignSession session;
    session.problem = problem;
    session.best_j = std::numeric_limits<double>::infinity();

    TemplateResult initial = make_template(problem.initial_template);
    ControllerStructure structure = std::move(initial.structure);
    ParamSpace space = std::move(initial.space);
    std::string action_kind_name = "initial";
    std::string rationale = problem.initial_template;

    for (int k = 0;; ++k) {
        IterationRecord rec;
        rec.k = k;
        rec.action_kind = action_kind_name;
        rec.action_rationale = rationale;
        rec.structure = structure;
        rec.space = space;

        const auto t0 = std::chrono::steady_clock::now();
        CandidateResult candidate = evaluate_candidate(structure, space, problem, k);
        const auto t1 = std::chrono::steady_clock::now();
        rec.theta = std::move(candidate.theta);
        rec.pso = std::move(candidate.pso);
        rec.feedback = std::move(candidate.feedback);
        rec.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        session.iterations.push_back(std::move(rec));

        if (session.iterations.back().feedback.index_j < session.best_j) {
            session.best_j = session.iterations.back().feedback.index_j;
            session.best_iteration = k;
            session.best_structure = session.iterations.back().structure;
            session.best_theta = session.iterations.back().theta;
        }

        const ProposerState state = build_state(session, problem);
        if (const auto reason = check_termination(state, problem.session)) {
            session.termination = *reason;
            break;
        }

        const Action action = proposer->propose(state);
        if (const auto* stop = std::get_if<Terminate>(&action)) {
            session.termination = stop->reason == "specs met" ? TerminationReason::SpecsMet
                                                              : TerminationReason::Stagnation;
            break;
        }
        if (const auto* fresh = std::get_if<NewStructure>(&action)) {
            structure = fresh->structure;
            space = fresh->space;
            action_kind_name = "new_structure";
            rationale = fresh->structure.name;
        } else {
            const auto& modify = std::get<ModifyStructure>(action);
            structure = modify.structure;
            space = modify.space;
            action_kind_name = "modify_structure";
            rationale = modify.rationale;
        }

        const auto violations = validate(structure);
        if (!violations.empty())
            throw ValidationError("proposer produced an invalid structure: " + violations.front());
        space.check();
    }
    return session;
}

// --- serialization ----------------------------------------------------------

namespace {

json space_to_json(const ParamSpace& space) {
    json out = json::array();
    for (const auto& b : space.bounds) out.push_back({b.lower, b.upper});
    return out;
}

ParamSpace space_from_json(const json& doc) {
    ParamSpace space;
    for (const auto& pair : doc) space.bounds.push_back({pair.at(0), pair.at(1)});
    return space;
}

}  // namespace

json problem_to_json(const DesignProblem& p) {
    json events = json::array();
    for (const auto& e : p.scenario.load_events)
        events.push_back({{"time", e.time}, {"r_load", e.r_load}});
    return json{
        {"plant",
         {{"v_in", p.plant.v_in},
          {"l", p.plant.l},
          {"c", p.plant.c},
          {"r_load_nominal", p.plant.r_load_nominal},
          {"f_sw", p.plant.f_sw},
          {"v_ref", p.plant.v_ref}}},
        {"scenario",
         {{"t_end", p.scenario.t_end},
          {"initial_i_l", p.scenario.initial_i_l},
          {"initial_v_c", p.scenario.initial_v_c},
          {"load_events", std::move(events)}}},
        {"spec",
         {{"max_overshoot_pct", p.spec.max_overshoot_pct},
          {"max_sse_pct", p.spec.max_sse_pct},
          {"settling_band_pct", p.spec.settling_band_pct},
          {"chattering_threshold", p.spec.chattering_threshold}}},
        {"weights",
         {{"w_overshoot", p.weights.w_overshoot},
          {"w_sse", p.weights.w_sse},
          {"w_settling", p.weights.w_settling},
          {"w_chattering", p.weights.w_chattering},
          {"w_iae", p.weights.w_iae},
          {"penalty_per_violation", p.weights.penalty_per_violation},
          {"j_divergence", p.weights.j_divergence}}},
        {"sim",
         {{"control_dt", p.sim.control_dt},
          {"substeps", p.sim.substeps},
          {"duty_min", p.sim.duty_min},
          {"duty_max", p.sim.duty_max}}},
        {"pso",
         {{"swarm_size", p.pso.swarm_size},
          {"max_iters", p.pso.max_iters},
          {"inertia_start", p.pso.inertia_start},
          {"inertia_end", p.pso.inertia_end},
          {"cognitive_c1", p.pso.cognitive_c1},
          {"social_c2", p.pso.social_c2},
          {"velocity_clamp_frac", p.pso.velocity_clamp_frac},
          {"early_stop_patience", p.pso.early_stop.patience},
          {"early_stop_rel_improvement", p.pso.early_stop.min_rel_improvement},
          {"workers", p.pso.workers},
          {"error_penalty", p.pso.error_penalty},
          {"restarts", p.pso.restarts}}},
        {"session",
         {{"k_max", p.session.k_max},
          {"stagnation_patience", p.session.stagnation_patience},
          {"stagnation_rel_improvement", p.session.stagnation_rel_improvement},
          {"seed", p.session.seed},
          {"mode", std::string(to_string(p.session.mode))}}},
        {"llm",
         {{"endpoint", p.llm.endpoint},
          {"model", p.llm.model},
          {"auth_env", p.llm.auth_env},
          {"temperature", p.llm.temperature},
          {"max_retries", p.llm.max_retries},
          {"timeout_s", p.llm.timeout_s},
          {"backoff_ms", p.llm.backoff_ms}}},
        {"initial_template", p.initial_template},
        {"prompt_dir", p.prompt_dir},
    };
}

DesignProblem problem_from_json(const json& doc) {
    DesignProblem p;
    const auto& plant = doc.at("plant");
    p.plant.v_in = plant.at("v_in");
    p.plant.l = plant.at("l");
    p.plant.c = plant.at("c");
    p.plant.r_load_nominal = plant.at("r_load_nominal");
    p.plant.f_sw = plant.at("f_sw");
    p.plant.v_ref = plant.at("v_ref");

    const auto& scenario = doc.at("scenario");
    p.scenario.plant = p.plant;
    p.scenario.t_end = scenario.at("t_end");
    p.scenario.initial_i_l = scenario.at("initial_i_l");
    p.scenario.initial_v_c = scenario.at("initial_v_c");
    for (const auto& e : scenario.at("load_events"))
        p.scenario.load_events.push_back({e.at("time"), e.at("r_load")});

    const auto& spec = doc.at("spec");
    p.spec.max_overshoot_pct = spec.at("max_overshoot_pct");
    p.spec.max_sse_pct = spec.at("max_sse_pct");
    p.spec.settling_band_pct = spec.at("settling_band_pct");
    p.spec.chattering_threshold = spec.at("chattering_threshold");

    const auto& weights = doc.at("weights");
    p.weights.w_overshoot = weights.at("w_overshoot");
    p.weights.w_sse = weights.at("w_sse");
    p.weights.w_settling = weights.at("w_settling");
    p.weights.w_chattering = weights.at("w_chattering");
    p.weights.w_iae = weights.at("w_iae");
    p.weights.penalty_per_violation = weights.at("penalty_per_violation");
    p.weights.j_divergence = weights.at("j_divergence");

    const auto& sim = doc.at("sim");
    p.sim.control_dt = sim.at("control_dt");
    p.sim.substeps = sim.at("substeps");
    p.sim.duty_min = sim.at("duty_min");
    p.sim.duty_max = sim.at("duty_max");

    const auto& pso = doc.at("pso");
    p.pso.swarm_size = pso.at("swarm_size");
    p.pso.max_iters = pso.at("max_iters");
    p.pso.inertia_start = pso.at("inertia_start");
    p.pso.inertia_end = pso.at("inertia_end");
    p.pso.cognitive_c1 = pso.at("cognitive_c1");
    p.pso.social_c2 = pso.at("social_c2");
    p.pso.velocity_clamp_frac = pso.at("velocity_clamp_frac");
    p.pso.early_stop.patience = pso.at("early_stop_patience");
    p.pso.early_stop.min_rel_improvement = pso.at("early_stop_rel_improvement");
    p.pso.workers = pso.at("workers");
    p.pso.error_penalty = pso.at("error_penalty");
    p.pso.restarts = pso.at("restarts");

    const auto& session = doc.at("session");
    p.session.k_max = session.at("k_max");
    p.session.stagnation_patience = session.at("stagnation_patience");
    p.session.stagnation_rel_improvement = session.at("stagnation_rel_improvement");
    p.session.seed = session.at("seed");
    p.session.mode = proposer_mode_from(session.at("mode"));

    const auto& llm = doc.at("llm");
    p.llm.endpoint = llm.at("endpoint");
    p.llm.model = llm.at("model");
    p.llm.auth_env = llm.at("auth_env");
    p.llm.temperature = llm.at("temperature");
    p.llm.max_retries = llm.at("max_retries");
    p.llm.timeout_s = llm.at("timeout_s");
    p.llm.backoff_ms = llm.at("backoff_ms");

    p.initial_template = doc.at("initial_template");
    p.prompt_dir = doc.at("prompt_dir");
    return p;
}

json session_to_json(const DesignSession& session) {
    json iterations = json::array();
    for (const auto& it : session.iterations) {
        iterations.push_back({
            {"k", it.k},
            {"action", {{"kind", it.action_kind}, {"rationale", it.action_rationale}}},
            {"structure", structure_to_json(it.structure)},
            {"space", space_to_json(it.space)},
            {"theta", it.theta},
            {"pso",
             {{"best_fitness", it.pso.best_fitness},
              {"evaluations", it.pso.evaluations},
              {"history", it.pso.history}}},
            {"feedback", feedback_to_json(it.feedback)},
        });
    }
    return json{
        {"schema_version", session.schema_version},
        {"problem", problem_to_json(session.problem)},
        {"iterations", std::move(iterations)},
        {"best",
         {{"iteration", session.best_iteration},
          {"structure", structure_to_json(session.best_structure)},
          {"theta", session.best_theta},
          {"j", session.best_j}}},
        {"termination_reason", std::string(to_string(session.termination))},
    };
}

DesignSession session_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("schema_version"))
        throw ParseError("session log is missing schema_version");
    if (doc.at("schema_version").get<int>() != 1)
        throw ParseError("unsupported session log schema_version " +
                         doc.at("schema_version").dump());

    DesignSession session;
    session.schema_version = 1;
    session.problem = problem_from_json(doc.at("problem"));
    for (const auto& it : doc.at("iterations")) {
        IterationRecord rec;
        rec.k = it.at("k");
        rec.action_kind = it.at("action").at("kind");
        rec.action_rationale = it.at("action").at("rationale");
        rec.structure = structure_from_json(it.at("structure"));
        rec.space = space_from_json(it.at("space"));
        rec.theta = it.at("theta").get<ParamVector>();
        rec.pso.best_fitness = it.at("pso").at("best_fitness");
        rec.pso.evaluations = it.at("pso").at("evaluations");
        rec.pso.history = it.at("pso").at("history").get<std::vector<double>>();
        rec.pso.best_theta = rec.theta;
        rec.feedback = feedback_from_json(it.at("feedback"));
        session.iterations.push_back(std::move(rec));
    }
    const auto& best = doc.at("best");
    session.best_iteration = best.at("iteration");
    session.best_structure = structure_from_json(best.at("structure"));
    session.best_theta = best.at("theta").get<ParamVector>();
    session.best_j = best.at("j");
    session.termination = termination_from(doc.at("termination_reason"));
    return session;
}

}  // namespace ctrlforge
