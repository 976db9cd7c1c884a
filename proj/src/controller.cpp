#include "ctrlforge/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

namespace ctrlforge {

namespace {

constexpr double kSafeDivFloor = 1e-9;

struct KindInfo {
    NodeKind kind;
    const char* name;
    int arity;
    int value_slot;  // first Param/Const slot, -1 if none
};

constexpr KindInfo kKinds[] = {
    {NodeKind::Const, "Const", 0, -1},
    {NodeKind::Param, "Param", 0, -1},
    {NodeKind::Signal, "Signal", 0, -1},
    {NodeKind::Add, "Add", 2, -1},
    {NodeKind::Sub, "Sub", 2, -1},
    {NodeKind::Mul, "Mul", 2, -1},
    {NodeKind::SafeDiv, "SafeDiv", 2, -1},
    {NodeKind::Neg, "Neg", 1, -1},
    {NodeKind::Abs, "Abs", 1, -1},
    {NodeKind::Sign, "Sign", 1, -1},
    {NodeKind::Sat, "Sat", 2, 1},
    {NodeKind::Integrator, "Integrator", 1, -1},
    {NodeKind::FilteredDeriv, "FilteredDeriv", 2, 1},
    {NodeKind::Gain, "Gain", 2, 1},
    {NodeKind::Min, "Min", 2, -1},
    {NodeKind::Max, "Max", 2, -1},
    {NodeKind::AdaptiveGain, "AdaptiveGain", 3, 1},
};

const KindInfo& info(NodeKind kind) {
    return kKinds[static_cast<int>(kind)];
}

bool is_known_signal(const std::string& name) {
    for (const char* s : kSignalNames)
        if (name == s) return true;
    return false;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
    return info(kind).name;
}

std::optional<NodeKind> node_kind_from(std::string_view name) {
    for (const auto& k : kKinds)
        if (name == k.name) return k.kind;
    return std::nullopt;
}

int arity(NodeKind kind) {
    return info(kind).arity;
}

int first_value_slot(NodeKind kind) {
    return info(kind).value_slot;
}

void ParamSpace::check() const {
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const auto& b = bounds[i];
        if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || b.lower > b.upper) {
            std::ostringstream os;
            os << "param space dimension " << i << ": invalid bounds [" << b.lower << ", "
               << b.upper << "]";
            throw ConfigError(os.str());
        }
    }
}

namespace {

// DFS reachability + cycle check + depth, all from the output node.
// state: 0 unvisited, 1 on stack, 2 done.
bool dfs(const ControllerStructure& s, int node, std::vector<int>& state,
         std::vector<int>& depth, std::vector<int>& order, bool& cycle) {
    state[node] = 1;
    int d = 0;
    for (int child : s.nodes[node].children) {
        if (child < 0 || child >= static_cast<int>(s.nodes.size())) continue;
        if (state[child] == 1) {
            cycle = true;
            return false;
        }
        if (state[child] == 0 && !dfs(s, child, state, depth, order, cycle)) return false;
        d = std::max(d, depth[child] + 1);
    }
    depth[node] = d;
    state[node] = 2;
    order.push_back(node);
    return true;
}

}  // namespace

std::vector<std::string> validate(const ControllerStructure& s, const StructureLimits& limits) {
    std::vector<std::string> violations;
    auto add = [&](const std::string& v) { violations.push_back(v); };

    if (s.nodes.empty()) {
        add("structure has no nodes");
        return violations;
    }
    const int n = static_cast<int>(s.nodes.size());
    if (n > limits.max_nodes) {
        std::ostringstream os;
        os << "node count " << n << " exceeds max_nodes " << limits.max_nodes;
        add(os.str());
    }
    if (s.output < 0 || s.output >= n) {
        add("output index out of range");
        return violations;
    }

    for (int i = 0; i < n; ++i) {
        const auto& node = s.nodes[i];
        std::ostringstream at;
        at << "node " << i << " (" << to_string(node.kind) << "): ";
        const int want = arity(node.kind);
        if (static_cast<int>(node.children.size()) != want) {
            add(at.str() + "arity mismatch, expected " + std::to_string(want) + " children, got " +
                std::to_string(node.children.size()));
        }
        for (int child : node.children) {
            if (child < 0 || child >= n) add(at.str() + "child index out of range");
        }
        if (node.kind == NodeKind::Signal && !is_known_signal(node.signal)) {
            add(at.str() + "unknown signal '" + node.signal + "'");
        }
        if (node.kind == NodeKind::Param && node.param_index < 0) {
            add(at.str() + "negative parameter index");
        }
        if (node.kind == NodeKind::Const && !std::isfinite(node.const_value)) {
            add(at.str() + "non-finite constant");
        }
        const int slot = first_value_slot(node.kind);
        if (slot >= 0 && static_cast<int>(node.children.size()) == want) {
            for (int c = slot; c < want; ++c) {
                const int child = node.children[c];
                if (child < 0 || child >= n) continue;
                const NodeKind ck = s.nodes[child].kind;
                if (ck != NodeKind::Param && ck != NodeKind::Const) {
                    add(at.str() + "value slot " + std::to_string(c) +
                        " must be a Param or Const node");
                }
            }
        }
    }
    if (!violations.empty()) return violations;

    // Cycles and depth over the whole node set, so unreachable junk cannot
    // hide a cycle.
    std::vector<int> state(n, 0), depth(n, 0), order;
    bool cycle = false;
    for (int i = 0; i < n && !cycle; ++i)
        if (state[i] == 0) dfs(s, i, state, depth, order, cycle);
    if (cycle) {
        add("cycle detected");
        return violations;
    }
    if (depth[s.output] + 1 > limits.max_depth) {
        std::ostringstream os;
        os << "depth " << depth[s.output] + 1 << " exceeds max_depth " << limits.max_depth;
        add(os.str());
    }

    // Param indices must be exactly 0..d-1.
    std::set<int> indices;
    for (const auto& node : s.nodes)
        if (node.kind == NodeKind::Param) indices.insert(node.param_index);
    int expected = 0;
    for (int idx : indices) {
        if (idx != expected) {
            add("parameter indices not contiguous: missing index " + std::to_string(expected));
            break;
        }
        ++expected;
    }
    return violations;
}

int param_dimension(const ControllerStructure& s) {
    std::set<int> indices;
    for (const auto& node : s.nodes) {
        if (node.kind != NodeKind::Param) continue;
        if (node.param_index < 0) throw ValidationError("negative parameter index");
        indices.insert(node.param_index);
    }
    int expected = 0;
    for (int idx : indices) {
        if (idx != expected)
            throw ValidationError("parameter indices not contiguous: missing index " +
                                  std::to_string(expected));
        ++expected;
    }
    return static_cast<int>(indices.size());
}

bool contains_kind(const ControllerStructure& s, NodeKind kind) {
    return std::any_of(s.nodes.begin(), s.nodes.end(),
                       [&](const PrimitiveNode& n) { return n.kind == kind; });
}

InterpreterState make_state(const ControllerStructure& s) {
    auto violations = validate(s);
    if (!violations.empty()) throw ValidationError("invalid structure: " + violations.front());

    InterpreterState st;
    const int n = static_cast<int>(s.nodes.size());
    std::vector<int> state(n, 0), depth(n, 0);
    bool cycle = false;
    dfs(s, s.output, state, depth, st.order, cycle);

    st.integ.assign(n, 0.0);
    st.deriv_prev.assign(n, 0.0);
    st.deriv_value.assign(n, 0.0);
    st.gain.assign(n, 0.0);
    st.values.assign(n, 0.0);
    return st;
}

double eval_control(const ControllerStructure& s, const ParamVector& theta,
                    const ControlSignals& signals, InterpreterState& istate, double dt,
                    const IntegratorLimits& integ_limits) {
    if (istate.values.size() != s.nodes.size())
        throw ValidationError("interpreter state does not match structure");

    auto& v = istate.values;
    for (int idx : istate.order) {
        const PrimitiveNode& node = s.nodes[idx];
        const auto child = [&](int c) { return v[node.children[c]]; };
        double out = 0.0;
        switch (node.kind) {
            case NodeKind::Const:
                out = node.const_value;
                break;
            case NodeKind::Param:
                if (node.param_index >= static_cast<int>(theta.size()))
                    throw ValidationError("theta shorter than parameter index");
                out = theta[node.param_index];
                break;
            case NodeKind::Signal:
                if (node.signal == "error") out = signals.error;
                else if (node.signal == "v_c") out = signals.v_c;
                else if (node.signal == "i_l") out = signals.i_l;
                else if (node.signal == "v_ref") out = signals.v_ref;
                else out = signals.prev_duty;
                break;
            case NodeKind::Add: out = child(0) + child(1); break;
            case NodeKind::Sub: out = child(0) - child(1); break;
            case NodeKind::Mul: out = child(0) * child(1); break;
            case NodeKind::SafeDiv: {
                double den = child(1);
                if (std::abs(den) < kSafeDivFloor) den = den < 0 ? -kSafeDivFloor : kSafeDivFloor;
                out = child(0) / den;
                break;
            }
            case NodeKind::Neg: out = -child(0); break;
            case NodeKind::Abs: out = std::abs(child(0)); break;
            case NodeKind::Sign: out = child(0) > 0 ? 1.0 : (child(0) < 0 ? -1.0 : 0.0); break;
            case NodeKind::Sat: {
                double width = std::abs(child(1));
                if (width < kSafeDivFloor) width = kSafeDivFloor;
                out = std::clamp(child(0) / width, -1.0, 1.0);
                break;
            }
            case NodeKind::Integrator: {
                double acc = istate.integ[idx] + child(0) * dt;
                acc = std::clamp(acc, integ_limits.lo, integ_limits.hi);
                istate.integ[idx] = acc;
                out = acc;
                break;
            }
            case NodeKind::FilteredDeriv: {
                // Dirty derivative: first-order filter with cutoff N rad/s
                // over the finite difference of the input.
                const double x = child(0);
                const double cutoff = std::max(child(1), 0.0);
                const double alpha = dt * cutoff / (1.0 + dt * cutoff);
                const double raw = (x - istate.deriv_prev[idx]) / dt;
                const double filtered =
                    istate.deriv_value[idx] + alpha * (raw - istate.deriv_value[idx]);
                istate.deriv_prev[idx] = x;
                istate.deriv_value[idx] = filtered;
                out = filtered;
                break;
            }
            case NodeKind::Gain: out = child(0) * child(1); break;
            case NodeKind::Min: out = std::min(child(0), child(1)); break;
            case NodeKind::Max: out = std::max(child(0), child(1)); break;
            case NodeKind::AdaptiveGain: {
                // K' = K + (rate*|driver| - leak*K)*dt, kept non-negative.
                const double driver = child(0);
                const double rate = child(1);
                const double leak = child(2);
                double k = istate.gain[idx];
                k += (rate * std::abs(driver) - leak * k) * dt;
                k = std::max(k, 0.0);
                istate.gain[idx] = k;
                out = k;
                break;
            }
        }
        if (!std::isfinite(out))
            throw InterpreterOverflow("non-finite value at node " + std::to_string(idx) + " (" +
                                      std::string(to_string(node.kind)) + ")");
        v[idx] = out;
    }
    return v[s.output];
}

}  // namespace ctrlforge
