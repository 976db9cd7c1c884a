#include "ctrlforge/proposer.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ctrlforge/serialization.hpp"
#include "ctrlforge/templates.hpp"

namespace ctrlforge {

std::string_view action_kind(const Action& action) {
    if (std::holds_alternative<NewStructure>(action)) return "new_structure";
    if (std::holds_alternative<ModifyStructure>(action)) return "modify_structure";
    return "terminate";
}

int stagnation_count(const std::vector<double>& j_history, double min_rel_improvement) {
    double best = std::numeric_limits<double>::infinity();
    int count = 0;
    for (double j : j_history) {
        const double scale = std::max(std::abs(best), 1e-12);
        if (std::isinf(best) || (best - j) / scale > min_rel_improvement) {
            count = 0;
        } else {
            ++count;
        }
        best = std::min(best, j);
    }
    return count;
}

ParamSpace default_param_space(const ControllerStructure& s) {
    const int dim = param_dimension(s);
    ParamSpace space;
    space.bounds.assign(dim, ParamBounds{0.02, 0.95});  // free params act as duty bias

    std::vector<bool> typed(dim, false);
    const auto assign = [&](int node_index, ParamBounds bounds) {
        if (node_index < 0 || node_index >= static_cast<int>(s.nodes.size())) return;
        const auto& child = s.nodes[node_index];
        if (child.kind != NodeKind::Param) return;
        if (typed[child.param_index]) return;  // first typed consumer wins
        space.bounds[child.param_index] = bounds;
        typed[child.param_index] = true;
    };

    for (const auto& node : s.nodes) {
        switch (node.kind) {
            case NodeKind::Gain: assign(node.children[1], {0.0, 100.0}); break;
            case NodeKind::Sat: assign(node.children[1], {1e-3, 10.0}); break;
            case NodeKind::FilteredDeriv: assign(node.children[1], {10.0, 5000.0}); break;
            case NodeKind::AdaptiveGain:
                assign(node.children[1], {0.0, 500.0});
                assign(node.children[2], {0.0, 50.0});
                break;
            default: break;
        }
    }
    return space;
}

namespace {

// Drop nodes unreachable from the output and re-index parameters to the
// contiguous first-use order. Returns old-index -> new-index for parameters
// that survived.
std::vector<std::pair<int, int>> compact(ControllerStructure& s) {
    const int n = static_cast<int>(s.nodes.size());
    std::vector<bool> reachable(n, false);
    std::vector<int> stack{s.output};
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        if (reachable[node]) continue;
        reachable[node] = true;
        for (int child : s.nodes[node].children) stack.push_back(child);
    }

    std::vector<int> remap(n, -1);
    std::vector<PrimitiveNode> kept;
    for (int i = 0; i < n; ++i) {
        if (!reachable[i]) continue;
        remap[i] = static_cast<int>(kept.size());
        kept.push_back(std::move(s.nodes[i]));
    }
    for (auto& node : kept)
        for (auto& child : node.children) child = remap[child];
    s.nodes = std::move(kept);
    s.output = remap[s.output];

    std::vector<int> param_remap;
    for (auto& node : s.nodes) {
        if (node.kind != NodeKind::Param) continue;
        const auto it = std::find(param_remap.begin(), param_remap.end(), node.param_index);
        if (it == param_remap.end()) {
            param_remap.push_back(node.param_index);
            node.param_index = static_cast<int>(param_remap.size()) - 1;
        } else {
            node.param_index = static_cast<int>(it - param_remap.begin());
        }
    }
    std::vector<std::pair<int, int>> survivors;
    for (std::size_t i = 0; i < param_remap.size(); ++i)
        survivors.emplace_back(param_remap[i], static_cast<int>(i));
    return survivors;
}

// New parameters get derived defaults; parameters carried over from the
// original structure keep their bounds.
Rewrite finish(ControllerStructure s, const std::string& suffix, const ParamSpace& original,
               int original_dim) {
    const auto survivors = compact(s);
    s.name += suffix;
    const auto violations = validate(s);
    if (!violations.empty())
        throw ValidationError("rewrite produced an invalid structure: " + violations.front());
    ParamSpace space = default_param_space(s);
    for (const auto& [old_index, new_index] : survivors) {
        if (old_index < original_dim &&
            old_index < static_cast<int>(original.bounds.size()))
            space.bounds[new_index] = original.bounds[old_index];
    }
    return {std::move(s), std::move(space)};
}

int push(ControllerStructure& s, PrimitiveNode node) {
    s.nodes.push_back(std::move(node));
    return static_cast<int>(s.nodes.size()) - 1;
}

int fresh_param(ControllerStructure& s) {
    int next = 0;
    for (const auto& node : s.nodes)
        if (node.kind == NodeKind::Param) next = std::max(next, node.param_index + 1);
    return push(s, {.kind = NodeKind::Param, .param_index = next});
}

bool has_free_param(const ControllerStructure& s) {
    std::vector<bool> in_slot(s.nodes.size(), false);
    for (const auto& node : s.nodes) {
        const int slot = first_value_slot(node.kind);
        if (slot < 0) continue;
        for (std::size_t c = slot; c < node.children.size(); ++c) in_slot[node.children[c]] = true;
    }
    for (std::size_t i = 0; i < s.nodes.size(); ++i)
        if (s.nodes[i].kind == NodeKind::Param && !in_slot[i]) return true;
    return false;
}

}  // namespace

Rewrite replace_sign_with_adaptive_sat(const ControllerStructure& input,
                                       const ParamSpace& original) {
    const int original_dim = param_dimension(input);
    ControllerStructure s = input;
    int sign_index = -1;
    for (std::size_t i = 0; i < s.nodes.size(); ++i)
        if (s.nodes[i].kind == NodeKind::Sign) sign_index = static_cast<int>(i);
    if (sign_index < 0) throw ValidationError("structure has no Sign node to replace");

    const int driver = s.nodes[sign_index].children[0];

    // Sign(s) -> Sat(s, new width parameter)
    const int width = fresh_param(s);
    s.nodes[sign_index].kind = NodeKind::Sat;
    s.nodes[sign_index].children.push_back(width);

    // Wrap the switching gain: Gain(sat, K) -> Mul(AdaptiveGain(s, rate, leak), sat).
    // Without such a gain, multiply the sat output in place.
    int consumer = -1;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        const auto& node = s.nodes[i];
        if (node.kind == NodeKind::Gain && node.children[0] == sign_index)
            consumer = static_cast<int>(i);
    }
    const int rate = fresh_param(s);
    const int leak = fresh_param(s);
    const int adaptive =
        push(s, {.kind = NodeKind::AdaptiveGain, .children = {driver, rate, leak}});
    if (consumer >= 0) {
        s.nodes[consumer].kind = NodeKind::Mul;
        s.nodes[consumer].children = {adaptive, sign_index};
    } else {
        // Re-route every parent of the sat node through the adaptive product.
        const int product = push(s, {.kind = NodeKind::Mul, .children = {adaptive, sign_index}});
        for (int i = 0; i < static_cast<int>(s.nodes.size()); ++i) {
            if (i == product) continue;
            for (auto& child : s.nodes[i].children)
                if (child == sign_index) child = product;
        }
        if (s.output == sign_index) s.output = product;
    }
    return finish(std::move(s), "+adaptive-sat", original, original_dim);
}

Rewrite add_integral_path(const ControllerStructure& input, const ParamSpace& original) {
    const int original_dim = param_dimension(input);
    ControllerStructure s = input;
    const int error = push(s, {.kind = NodeKind::Signal, .signal = "error"});
    const int ki = fresh_param(s);
    const int scaled = push(s, {.kind = NodeKind::Gain, .children = {error, ki}});
    const int integ = push(s, {.kind = NodeKind::Integrator, .children = {scaled}});
    s.output = push(s, {.kind = NodeKind::Add, .children = {s.output, integ}});
    return finish(std::move(s), "+integral", original, original_dim);
}

Rewrite add_derivative_damping(const ControllerStructure& input, const ParamSpace& original) {
    const int original_dim = param_dimension(input);
    ControllerStructure s = input;
    const int v_c = push(s, {.kind = NodeKind::Signal, .signal = "v_c"});
    const int kd = fresh_param(s);
    const int cutoff = fresh_param(s);
    const int deriv = push(s, {.kind = NodeKind::FilteredDeriv, .children = {v_c, cutoff}});
    const int damp = push(s, {.kind = NodeKind::Gain, .children = {deriv, kd}});
    s.output = push(s, {.kind = NodeKind::Sub, .children = {s.output, damp}});
    return finish(std::move(s), "+damping", original, original_dim);
}

Rewrite add_bias_term(const ControllerStructure& input, const ParamSpace& original) {
    const int original_dim = param_dimension(input);
    ControllerStructure s = input;
    const int bias = fresh_param(s);
    s.output = push(s, {.kind = NodeKind::Add, .children = {s.output, bias}});
    return finish(std::move(s), "+bias", original, original_dim);
}

ParamSpace widen_bounds(const ParamSpace& space, double factor) {
    ParamSpace wide = space;
    for (auto& b : wide.bounds) {
        const double span = b.upper - b.lower;
        const double grow = span * (factor - 1.0) * 0.5;
        const bool non_negative = b.lower >= 0.0;
        b.lower -= grow;
        b.upper += grow;
        if (non_negative) b.lower = std::max(0.0, b.lower);
    }
    return wide;
}

ParamSpace halve_gain_uppers(const ControllerStructure& s, const ParamSpace& space) {
    ParamSpace tightened = space;
    for (const auto& node : s.nodes) {
        const int slot = first_value_slot(node.kind);
        if (node.kind != NodeKind::Gain && node.kind != NodeKind::AdaptiveGain) continue;
        for (std::size_t c = slot; c < node.children.size(); ++c) {
            const auto& child = s.nodes[node.children[c]];
            if (child.kind != NodeKind::Param) continue;
            auto& b = tightened.bounds[child.param_index];
            b.upper = b.lower + (b.upper - b.lower) * 0.5;
        }
    }
    return tightened;
}

Action RuleBasedProposer::propose(const ProposerState& state) {
    if (state.feedback_history.empty())
        return NewStructure{make_template("SMC").structure, make_template("SMC").space};

    const PerformanceFeedback& latest = state.feedback_history.back();
    if (latest.specs_met) return Terminate{"specs met"};

    const auto& flags = latest.spec_flags;
    // Exploration order: most capable family first.
    static const char* kExplorationOrder[] = {"AdaptiveSMC", "PID", "PI", "SMC", "ConstDuty"};
    const auto untried = [&]() -> std::optional<TemplateResult> {
        for (const char* name : kExplorationOrder) {
            if (std::find(state.tried_templates.begin(), state.tried_templates.end(), name) ==
                state.tried_templates.end())
                return make_template(name);
        }
        return std::nullopt;
    };

    if (flags.contains(SpecFlag::Diverged)) {
        if (std::isfinite(state.best_j) && !state.best_structure.nodes.empty())
            return ModifyStructure{state.best_structure, widen_bounds(state.best_space, 2.0),
                                   "revert to best-so-far structure with widened bounds"};
        if (auto t = untried())
            return NewStructure{std::move(t->structure), std::move(t->space)};
        return ModifyStructure{state.current_structure, widen_bounds(state.current_space, 2.0),
                               "widen bounds after divergence"};
    }

    std::vector<double> j_history;
    for (const auto& f : state.feedback_history) j_history.push_back(f.index_j);
    if (stagnation_count(j_history, min_rel_improvement_) >= patience_) {
        if (auto t = untried())
            return NewStructure{std::move(t->structure), std::move(t->space)};
        return ModifyStructure{state.current_structure, widen_bounds(state.current_space, 1.5),
                               "stagnation: widen bounds"};
    }

    if (flags.contains(SpecFlag::ChatteringDetected) &&
        contains_kind(state.current_structure, NodeKind::Sign)) {
        auto rw = replace_sign_with_adaptive_sat(state.current_structure, state.current_space);
        return ModifyStructure{std::move(rw.structure), std::move(rw.space),
                               "boundary layer + adaptive switching gain to suppress chattering"};
    }
    if (flags.contains(SpecFlag::SseExceeded) &&
        !contains_kind(state.current_structure, NodeKind::Integrator)) {
        auto rw = add_integral_path(state.current_structure, state.current_space);
        return ModifyStructure{std::move(rw.structure), std::move(rw.space),
                               "integral action on the error to remove steady-state error"};
    }
    if (flags.contains(SpecFlag::OvershootExceeded)) {
        // A discontinuous switching term is the binding constraint for
        // transient shaping; smooth it before adding damping on top.
        if (contains_kind(state.current_structure, NodeKind::Sign)) {
            auto rw = replace_sign_with_adaptive_sat(state.current_structure, state.current_space);
            return ModifyStructure{std::move(rw.structure), std::move(rw.space),
                                   "boundary layer + adaptive gain: the discontinuous switching "
                                   "term limits transient shaping"};
        }
        if (!contains_kind(state.current_structure, NodeKind::FilteredDeriv)) {
            auto rw = add_derivative_damping(state.current_structure, state.current_space);
            return ModifyStructure{std::move(rw.structure), std::move(rw.space),
                                   "filtered-derivative damping path to curb overshoot"};
        }
        return ModifyStructure{state.current_structure,
                               halve_gain_uppers(state.current_structure, state.current_space),
                               "halve gain upper bounds to curb overshoot"};
    }
    if (flags.contains(SpecFlag::SettlingSlow) && !has_free_param(state.current_structure)) {
        auto rw = add_bias_term(state.current_structure, state.current_space);
        return ModifyStructure{std::move(rw.structure), std::move(rw.space),
                               "feedforward duty bias toward the operating point"};
    }

    if (auto t = untried()) return NewStructure{std::move(t->structure), std::move(t->space)};
    return ModifyStructure{state.current_structure, widen_bounds(state.current_space, 1.5),
                           "explore: widen bounds"};
}

ParseOutcome parse_action(const std::string& text, const ControllerStructure& current) {
    (void)current;
    std::string last_failure = "no structure block found in the reply";
    for (std::size_t start = text.find('{'); start != std::string::npos;
         start = text.find('{', start + 1)) {
        // Balanced-brace scan, string-literal aware.
        int depth = 0;
        bool in_string = false;
        std::size_t end = std::string::npos;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                end = i;
                break;
            }
        }
        if (end == std::string::npos) break;

        const std::string candidate = text.substr(start, end - start + 1);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(candidate);
        } catch (const nlohmann::json::parse_error&) {
            continue;  // not a JSON object; keep scanning
        }
        if (!doc.is_object() || !doc.contains("nodes")) continue;

        try {
            ControllerStructure s = structure_from_json(doc);
            const auto violations = validate(s);
            if (!violations.empty()) {
                std::string detail = "structure rejected by the validator:";
                for (const auto& v : violations) detail += "\n  - " + v;
                last_failure = detail;
                continue;
            }
            ParamSpace space = default_param_space(s);
            return {ModifyStructure{std::move(s), std::move(space), "proposed by language model"},
                    ""};
        } catch (const Error& e) {
            last_failure = std::string("structure document rejected: ") + e.what();
        }
    }
    return {std::nullopt, last_failure};
}

LlmProposer::LlmProposer(LlmConfig cfg, TemplateLibrary templates, bool fallback_to_rules)
    : cfg_(cfg), client_(std::move(cfg)), templates_(std::move(templates)),
      fallback_(fallback_to_rules) {}

Action LlmProposer::propose(const ProposerState& state) {
    if (!state.feedback_history.empty() && state.feedback_history.back().specs_met)
        return Terminate{"specs met"};

    std::vector<double> j_history;
    for (const auto& f : state.feedback_history) j_history.push_back(f.index_j);
    const bool stagnant = stagnation_count(j_history, 0.01) >= 3;

    const std::set<SpecFlag> flags =
        state.feedback_history.empty() ? std::set<SpecFlag>{} :
                                         state.feedback_history.back().spec_flags;
    const PromptTemplate& tmpl = stagnant ? templates_.exploration() : templates_.select(flags);

    try {
        const std::string base_prompt = render(tmpl, state);
        std::string prompt = base_prompt;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            const std::vector<ChatMessage> messages{
                {"system", primitive_catalog_text() + "\n" + output_schema_text()},
                {"user", prompt},
            };
            const std::string reply = client_.complete(messages);
            ParseOutcome outcome = parse_action(reply, state.current_structure);
            if (outcome.action) return std::move(*outcome.action);
            prompt = base_prompt + "\n\nYour previous reply was not usable: " + outcome.failure +
                     "\nReturn exactly one corrected JSON structure document.";
        }
    } catch (const LlmError& e) {
        if (!fallback_) throw ProposerError(std::string("llm transport failed: ") + e.what());
        return fallback_rules_.propose(state);
    }

    if (!fallback_)
        throw ProposerError("llm replies stayed invalid after " +
                            std::to_string(cfg_.max_retries) + " re-prompts");
    return fallback_rules_.propose(state);
}

}  // namespace ctrlforge
