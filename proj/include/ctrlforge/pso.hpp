#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ctrlforge/controller.hpp"

namespace ctrlforge {

struct EarlyStop {
    int patience = 10;
    double min_rel_improvement = 0.001;  // improvement must exceed this fraction
};

struct PsoConfig {
    int swarm_size = 30;
    int max_iters = 60;
    double inertia_start = 0.9;
    double inertia_end = 0.4;
    double cognitive_c1 = 1.5;
    double social_c2 = 1.5;
    double velocity_clamp_frac = 0.2;
    std::uint64_t seed = 0;
    EarlyStop early_stop;
    int workers = 0;             // 0 = hardware concurrency
    double error_penalty = 1e6;  // fitness for throwing / non-finite evaluations
    // Independent runs per candidate structure (seeds derived per run, best
    // kept). Consumed by the orchestrator, not by optimize() itself.
    int restarts = 2;

    void check() const;
};

struct PsoResult {
    ParamVector best_theta;
    double best_fitness = 0.0;
    std::vector<double> history;  // best-so-far after init and after each iteration
    long evaluations = 0;
};

using FitnessFn = std::function<double(const ParamVector&)>;

// Global-best PSO with linearly annealed inertia, bound clamping, and
// velocity clamping. Randomness comes from counter-based streams keyed by
// (seed, iteration, particle), so results are identical no matter how the
// fitness fan-out is scheduled.
PsoResult optimize(const FitnessFn& fitness, const ParamSpace& space, const PsoConfig& cfg);

// Order-preserving fitness fan-out; exceptions and non-finite values map to
// error_penalty.
std::vector<double> evaluate_swarm(const std::vector<ParamVector>& particles,
                                   const FitnessFn& fitness, int workers = 0,
                                   double error_penalty = 1e6);

}  // namespace ctrlforge
