#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ctrlforge/controller.hpp"
#include "ctrlforge/metrics.hpp"
#include "ctrlforge/plant.hpp"

namespace ctrlforge {

// Everything the upper level may look at when deciding the next structural
// move. Built fresh from the session history each iteration, so proposers
// stay stateless and deterministic.
struct ProposerState {
    int iteration = 0;
    PerformanceSpec spec;
    PlantParams plant;
    ControllerStructure current_structure;
    ParamVector current_theta;
    ParamSpace current_space;
    std::vector<PerformanceFeedback> feedback_history;
    ControllerStructure best_structure;
    ParamVector best_theta;
    ParamSpace best_space;
    double best_j = 0.0;
    std::vector<std::string> tried_templates;
};

struct NewStructure {
    ControllerStructure structure;
    ParamSpace space;
};

struct ModifyStructure {
    ControllerStructure structure;
    ParamSpace space;
    std::string rationale;
};

struct Terminate {
    std::string reason;
};

using Action = std::variant<NewStructure, ModifyStructure, Terminate>;

std::string_view action_kind(const Action& action);

// Trailing count of iterations whose J did not improve on the preceding
// best by more than min_rel_improvement.
int stagnation_count(const std::vector<double>& j_history, double min_rel_improvement);

}  // namespace ctrlforge
