#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ctrlforge/design_state.hpp"
#include "ctrlforge/llm_client.hpp"
#include "ctrlforge/prompt.hpp"

namespace ctrlforge {

class Proposer {
public:
    virtual ~Proposer() = default;
    virtual Action propose(const ProposerState& state) = 0;
};

// Deterministic flag-to-production table (first match wins):
//   specs met                          -> Terminate
//   diverged                           -> revert to best-so-far, widened bounds
//   stagnation (>= patience)           -> new structure from an untried template
//   chattering and law uses Sign       -> Sign -> Sat, switching gain -> AdaptiveGain
//   sse exceeded, no Integrator        -> add integral path on the error
//   overshoot, no FilteredDeriv        -> add filtered-derivative damping path
//   overshoot otherwise                -> halve gain upper bounds
//   settling slow, no free bias        -> add a feedforward bias parameter
//   fallback                           -> untried template, else widened bounds
class RuleBasedProposer final : public Proposer {
public:
    explicit RuleBasedProposer(int stagnation_patience = 3, double min_rel_improvement = 0.01)
        : patience_(stagnation_patience), min_rel_improvement_(min_rel_improvement) {}

    Action propose(const ProposerState& state) override;

private:
    int patience_;
    double min_rel_improvement_;
};

// select_template -> render -> complete -> parse -> validate, re-prompting
// with the validator's failure detail up to max_retries times, then falling
// back to the rule table (or raising ProposerError when fallback is off).
class LlmProposer final : public Proposer {
public:
    LlmProposer(LlmConfig cfg, TemplateLibrary templates, bool fallback_to_rules = true);

    Action propose(const ProposerState& state) override;

private:
    LlmConfig cfg_;
    LlmClient client_;
    TemplateLibrary templates_;
    bool fallback_;
    RuleBasedProposer fallback_rules_;
};

struct ParseOutcome {
    std::optional<Action> action;
    std::string failure;  // re-promptable detail when action is empty
};

// Extract the first structure document from free-form reply text, validate
// it, and derive default bounds. Failures come back as text, never thrown.
ParseOutcome parse_action(const std::string& text, const ControllerStructure& current);

// Default bounds per consuming primitive: Gain [0,100], AdaptiveGain rate
// [0,500] leak [0,50], Sat width [1e-3,10], FilteredDeriv cutoff [10,5000];
// free parameters are treated as duty bias terms, [0.02,0.95].
ParamSpace default_param_space(const ControllerStructure& s);

// Structural rewrites used by the rule table. Each returns a compacted,
// re-validated structure; surviving parameters keep their original bounds,
// new ones get derived defaults.
struct Rewrite {
    ControllerStructure structure;
    ParamSpace space;
};

Rewrite replace_sign_with_adaptive_sat(const ControllerStructure& s, const ParamSpace& original);
Rewrite add_integral_path(const ControllerStructure& s, const ParamSpace& original);
Rewrite add_derivative_damping(const ControllerStructure& s, const ParamSpace& original);
Rewrite add_bias_term(const ControllerStructure& s, const ParamSpace& original);

ParamSpace widen_bounds(const ParamSpace& space, double factor);
ParamSpace halve_gain_uppers(const ControllerStructure& s, const ParamSpace& space);

}  // namespace ctrlforge
