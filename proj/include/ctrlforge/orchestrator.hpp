#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctrlforge/design_state.hpp"
#include "ctrlforge/llm_client.hpp"
#include "ctrlforge/metrics.hpp"
#include "ctrlforge/plant.hpp"
#include "ctrlforge/proposer.hpp"
#include "ctrlforge/pso.hpp"

namespace ctrlforge {

enum class ProposerMode { Rules, Llm, LlmWithFallback };

std::string_view to_string(ProposerMode mode);
ProposerMode proposer_mode_from(const std::string& name);

struct SessionConfig {
    int k_max = 10;
    int stagnation_patience = 3;
    double stagnation_rel_improvement = 0.01;
    std::uint64_t seed = 0;
    ProposerMode mode = ProposerMode::Rules;

    void check() const;
};

struct DesignProblem {
    PlantParams plant;
    Scenario scenario;
    PerformanceSpec spec;
    WeightSet weights;
    SimConfig sim;
    PsoConfig pso;
    SessionConfig session;
    LlmConfig llm;
    std::string initial_template = "SMC";
    std::string prompt_dir;  // empty = builtin template library

    void check() const;
};

enum class TerminationReason { SpecsMet, KMax, Stagnation };

std::string_view to_string(TerminationReason reason);
TerminationReason termination_from(const std::string& name);

struct IterationRecord {
    int k = 0;
    std::string action_kind;      // "initial", "new_structure", "modify_structure"
    std::string action_rationale;
    ControllerStructure structure;
    ParamSpace space;
    ParamVector theta;
    PsoResult pso;
    PerformanceFeedback feedback;
    double wall_seconds = 0.0;  // not persisted; logs stay byte-reproducible
};

struct DesignSession {
    int schema_version = 1;
    DesignProblem problem;
    std::vector<IterationRecord> iterations;
    int best_iteration = 0;
    ControllerStructure best_structure;
    ParamVector best_theta;
    double best_j = 0.0;
    TerminationReason termination = TerminationReason::KMax;
};

// Fitness closure used at the lower level: simulate -> metrics -> J, with
// diverging candidates mapped to the divergence penalty.
FitnessFn make_fitness(const ControllerStructure& structure, const DesignProblem& problem);

struct CandidateResult {
    ParamVector theta;
    PsoResult pso;
    PerformanceFeedback feedback;
};

// Lower-level optimization of one structure followed by evaluation at the
// optimum. Structures with no parameters get a single evaluation.
CandidateResult evaluate_candidate(const ControllerStructure& structure, const ParamSpace& space,
                                   const DesignProblem& problem, int iteration);

// Precedence: specs met, then the iteration budget, then stagnation.
std::optional<TerminationReason> check_termination(const ProposerState& state,
                                                   const SessionConfig& cfg);

// The closed loop: evaluate, record, decide, repeat. A custom proposer can be
// injected for tests; otherwise one is built from session.mode.
DesignSession run_session(const DesignProblem& problem, Proposer* proposer = nullptr);

// Session log round-trip. Wall-clock fields are intentionally not persisted:
// logs are byte-reproducible and reports derive from logs alone.
nlohmann::json session_to_json(const DesignSession& session);
DesignSession session_from_json(const nlohmann::json& doc);

nlohmann::json problem_to_json(const DesignProblem& problem);
DesignProblem problem_from_json(const nlohmann::json& doc);

}  // namespace ctrlforge
