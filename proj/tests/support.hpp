#pragma once

// Shared test helpers: reference integrators and a random-structure generator
// kept independent of the library's evaluation path.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ctrlforge/controller.hpp"
#include "ctrlforge/plant.hpp"
#include "ctrlforge/rng.hpp"

namespace testsupport {

using namespace ctrlforge;

// Forward-Euler reference integrator, deliberately simple.
inline PlantState euler_reference(PlantState state, double duty, double r_load, double horizon,
                                  double dt, const PlantParams& plant) {
    const long steps = std::lround(horizon / dt);
    for (long i = 0; i < steps; ++i) {
        const auto d = derivatives(state, duty, r_load, plant);
        state.i_l = std::max(0.0, state.i_l + dt * d.di_l_dt);
        state.v_c = state.v_c + dt * d.dv_c_dt;
        state.t += dt;
    }
    return state;
}

// RK4 at a chosen step, for convergence-order measurements.
inline PlantState rk4_at(PlantState state, double duty, double r_load, double horizon, double dt,
                         const PlantParams& plant) {
    const long steps = std::lround(horizon / dt);
    for (long i = 0; i < steps; ++i) state = step(state, duty, r_load, dt, plant);
    return state;
}

// Random valid structure. Nodes are appended in topological order (children
// always reference earlier indices), so the result is acyclic by
// construction; depths are tracked to respect max_depth.
inline ControllerStructure random_structure(std::uint64_t seed) {
    CounterRng rng(seed, 7777, 0);
    ControllerStructure s;
    std::vector<int> depth;
    int next_param = 0;

    const auto push = [&](PrimitiveNode node, int d) {
        s.nodes.push_back(std::move(node));
        depth.push_back(d);
        return static_cast<int>(s.nodes.size()) - 1;
    };
    const auto leaf = [&]() {
        const double pick = rng.next_unit();
        if (pick < 0.30) {
            const char* names[] = {"error", "v_c", "i_l", "v_ref", "prev_duty"};
            return push({.kind = NodeKind::Signal,
                         .signal = names[rng.next_u64() % 5]},
                        1);
        }
        if (pick < 0.60) {
            return push({.kind = NodeKind::Const, .const_value = rng.next_unit() * 20.0 - 10.0}, 1);
        }
        // Reuse an existing parameter index sometimes, else mint a new one.
        int index;
        if (next_param > 0 && rng.next_unit() < 0.3) {
            index = static_cast<int>(rng.next_u64() % next_param);
        } else {
            index = next_param++;
        }
        return push({.kind = NodeKind::Param, .param_index = index}, 1);
    };
    const auto value_slot = [&]() {
        if (rng.next_unit() < 0.5)
            return push({.kind = NodeKind::Const, .const_value = 0.1 + rng.next_unit() * 5.0}, 1);
        return push({.kind = NodeKind::Param, .param_index = next_param++}, 1);
    };

    const int seeds = 2 + static_cast<int>(rng.next_u64() % 3);
    for (int i = 0; i < seeds; ++i) leaf();

    const int internal = 3 + static_cast<int>(rng.next_u64() % 12);
    constexpr NodeKind ops[] = {NodeKind::Add,  NodeKind::Sub,        NodeKind::Mul,
                                NodeKind::SafeDiv, NodeKind::Neg,     NodeKind::Abs,
                                NodeKind::Sign, NodeKind::Sat,        NodeKind::Integrator,
                                NodeKind::FilteredDeriv, NodeKind::Gain, NodeKind::Min,
                                NodeKind::Max,  NodeKind::AdaptiveGain};
    for (int i = 0; i < internal && static_cast<int>(s.nodes.size()) < 48; ++i) {
        const NodeKind kind = ops[rng.next_u64() % std::size(ops)];
        // Children deep enough to threaten max_depth are skipped.
        std::vector<int> shallow;
        for (int n = 0; n < static_cast<int>(s.nodes.size()); ++n)
            if (depth[n] <= 9) shallow.push_back(n);
        if (shallow.empty()) break;
        const auto pick_child = [&]() {
            return shallow[rng.next_u64() % shallow.size()];
        };

        PrimitiveNode node{.kind = kind};
        int d = 0;
        const int total = arity(kind);
        const int slot = first_value_slot(kind);
        for (int c = 0; c < total; ++c) {
            const int child = (slot >= 0 && c >= slot) ? value_slot() : pick_child();
            node.children.push_back(child);
            d = std::max(d, depth[child]);
        }
        push(std::move(node), d + 1);
    }
    s.output = static_cast<int>(s.nodes.size()) - 1;

    // Re-index parameters to be contiguous in first-use order.
    std::vector<int> remap;
    for (auto& node : s.nodes) {
        if (node.kind != NodeKind::Param) continue;
        int found = -1;
        for (std::size_t i = 0; i < remap.size(); ++i)
            if (remap[i] == node.param_index) found = static_cast<int>(i);
        if (found < 0) {
            remap.push_back(node.param_index);
            found = static_cast<int>(remap.size()) - 1;
        }
        node.param_index = found;
    }
    s.name = "random-" + std::to_string(seed);
    return s;
}

}  // namespace testsupport
