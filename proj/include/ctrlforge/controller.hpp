#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctrlforge/errors.hpp"

namespace ctrlforge {

// Primitive library. Closed and versioned: the proposer may only compose
// these kinds, and validation rejects anything else.
enum class NodeKind {
    Const,
    Param,
    Signal,
    Add,
    Sub,
    Mul,
    SafeDiv,
    Neg,
    Abs,
    Sign,
    Sat,
    Integrator,
    FilteredDeriv,
    Gain,
    Min,
    Max,
    AdaptiveGain,
};

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from(std::string_view name);

// Child slots that must hold a tunable Param (or a fixed Const):
//   Gain(input, k), Sat(input, width), FilteredDeriv(input, cutoff),
//   AdaptiveGain(driver, rate, leak).
int arity(NodeKind kind);
int first_value_slot(NodeKind kind);  // index of the first Param/Const slot, -1 if none

// Measurements the controller can reference by name.
struct ControlSignals {
    double error = 0.0;      // v_ref - v_c
    double v_c = 0.0;
    double i_l = 0.0;
    double v_ref = 0.0;
    double prev_duty = 0.0;
};

inline constexpr const char* kSignalNames[] = {"error", "v_c", "i_l", "v_ref", "prev_duty"};

struct PrimitiveNode {
    NodeKind kind = NodeKind::Const;
    std::vector<int> children;
    double const_value = 0.0;  // Const only
    int param_index = -1;      // Param only
    std::string signal;        // Signal only

    bool operator==(const PrimitiveNode&) const = default;
};

// A control law as a typed expression DAG. Immutable once built; interpreter
// state lives separately so structures can be shared across evaluations.
struct ControllerStructure {
    std::string name;
    std::vector<PrimitiveNode> nodes;
    int output = -1;

    bool operator==(const ControllerStructure&) const = default;
};

struct StructureLimits {
    int max_nodes = 64;
    int max_depth = 12;
};

// Full structural check: acyclicity, arity, value-slot kinds, signal names,
// parameter-index contiguity, size limits. Empty result means valid.
std::vector<std::string> validate(const ControllerStructure& s, const StructureLimits& limits = {});

// Count of distinct Param indices; throws ValidationError when the indices
// are not exactly 0..d-1.
int param_dimension(const ControllerStructure& s);

bool contains_kind(const ControllerStructure& s, NodeKind kind);

struct ParamBounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct ParamSpace {
    std::vector<ParamBounds> bounds;

    std::size_t dimension() const { return bounds.size(); }
    // Inverted bounds are rejected. Degenerate (lower == upper) dimensions
    // are allowed; the optimizer collapses them to a point.
    void check() const;
};

using ParamVector = std::vector<double>;

// Per-simulation accumulators for stateful nodes, plus the cached evaluation
// order. Never shared between concurrent simulations.
struct InterpreterState {
    std::vector<int> order;          // topological, only nodes reachable from output
    std::vector<double> integ;       // Integrator accumulator, per node
    std::vector<double> deriv_prev;  // FilteredDeriv previous input, per node
    std::vector<double> deriv_value; // FilteredDeriv filtered value, per node
    std::vector<double> gain;        // AdaptiveGain current gain, per node
    std::vector<double> values;      // scratch, per node
};

InterpreterState make_state(const ControllerStructure& s);

struct IntegratorLimits {
    double lo = -1.0;
    double hi = 1.0;
};

// One tick of the control law. Stateful nodes advance exactly once per call.
// Throws InterpreterOverflow on non-finite intermediates.
double eval_control(const ControllerStructure& s, const ParamVector& theta,
                    const ControlSignals& signals, InterpreterState& istate, double dt,
                    const IntegratorLimits& integ_limits = {});

}  // namespace ctrlforge
