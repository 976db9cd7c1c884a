#include "ctrlforge/pso.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ctrlforge/errors.hpp"
#include "ctrlforge/rng.hpp"

namespace ctrlforge {

void PsoConfig::check() const {
    if (swarm_size < 2) throw ConfigError("pso.swarm_size must be at least 2");
    if (max_iters < 1) throw ConfigError("pso.max_iters must be at least 1");
    if (inertia_start < 0 || inertia_end < 0 || cognitive_c1 < 0 || social_c2 < 0)
        throw ConfigError("pso coefficients must be non-negative");
    if (velocity_clamp_frac <= 0 || velocity_clamp_frac > 1)
        throw ConfigError("pso.velocity_clamp_frac must lie in (0, 1]");
    if (early_stop.patience < 1) throw ConfigError("pso.early_stop patience must be at least 1");
    if (restarts < 1) throw ConfigError("pso.restarts must be at least 1");
}

std::vector<double> evaluate_swarm(const std::vector<ParamVector>& particles,
                                   const FitnessFn& fitness, int workers, double error_penalty) {
    std::vector<double> values(particles.size(), 0.0);
    const auto eval_one = [&](std::size_t i) {
        double f;
        try {
            f = fitness(particles[i]);
        } catch (const std::exception&) {
            f = error_penalty;
        }
        values[i] = std::isfinite(f) ? f : error_penalty;
    };

    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(particles.size())));

    if (workers == 1 || particles.size() <= 1) {
        for (std::size_t i = 0; i < particles.size(); ++i) eval_one(i);
        return values;
    }

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < particles.size(); i += workers) eval_one(i);
        });
    }
    for (auto& t : pool) t.join();
    return values;
}

PsoResult optimize(const FitnessFn& fitness, const ParamSpace& space, const PsoConfig& cfg) {
    cfg.check();
    space.check();
    const std::size_t dim = space.dimension();
    if (dim == 0) throw ConfigError("pso requires a parameter space of dimension >= 1");

    std::vector<double> range(dim), vmax(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        range[d] = space.bounds[d].upper - space.bounds[d].lower;
        vmax[d] = cfg.velocity_clamp_frac * range[d];
    }

    const std::size_t n = static_cast<std::size_t>(cfg.swarm_size);
    std::vector<ParamVector> position(n, ParamVector(dim, 0.0));
    std::vector<ParamVector> velocity(n, ParamVector(dim, 0.0));

    // Iteration 0 stream: initial positions; velocities start at rest.
    for (std::size_t p = 0; p < n; ++p) {
        CounterRng rng(cfg.seed, 0, p);
        for (std::size_t d = 0; d < dim; ++d)
            position[p][d] = space.bounds[d].lower + rng.next_unit() * range[d];
    }

    PsoResult result;
    std::vector<ParamVector> pbest = position;
    std::vector<double> pbest_fit = evaluate_swarm(position, fitness, cfg.workers,
                                                   cfg.error_penalty);
    result.evaluations = static_cast<long>(n);

    std::size_t gbest = 0;
    for (std::size_t p = 1; p < n; ++p)
        if (pbest_fit[p] < pbest_fit[gbest]) gbest = p;
    ParamVector gbest_pos = pbest[gbest];
    double gbest_fit = pbest_fit[gbest];
    result.history.push_back(gbest_fit);

    int since_improvement = 0;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const double frac = cfg.max_iters > 1 ? (iter - 1.0) / (cfg.max_iters - 1.0) : 1.0;
        const double inertia = cfg.inertia_start + (cfg.inertia_end - cfg.inertia_start) * frac;

        for (std::size_t p = 0; p < n; ++p) {
            CounterRng rng(cfg.seed, static_cast<std::uint64_t>(iter), p);
            for (std::size_t d = 0; d < dim; ++d) {
                const double r1 = rng.next_unit();
                const double r2 = rng.next_unit();
                double v = inertia * velocity[p][d] +
                           cfg.cognitive_c1 * r1 * (pbest[p][d] - position[p][d]) +
                           cfg.social_c2 * r2 * (gbest_pos[d] - position[p][d]);
                v = std::clamp(v, -vmax[d], vmax[d]);
                velocity[p][d] = v;
                position[p][d] =
                    std::clamp(position[p][d] + v, space.bounds[d].lower, space.bounds[d].upper);
            }
        }

        const std::vector<double> fit =
            evaluate_swarm(position, fitness, cfg.workers, cfg.error_penalty);
        result.evaluations += static_cast<long>(n);

        const double previous_best = gbest_fit;
        for (std::size_t p = 0; p < n; ++p) {
            if (fit[p] < pbest_fit[p]) {
                pbest_fit[p] = fit[p];
                pbest[p] = position[p];
            }
            if (fit[p] < gbest_fit) {
                gbest_fit = fit[p];
                gbest_pos = position[p];
            }
        }
        result.history.push_back(gbest_fit);

        const double scale = std::max(std::abs(previous_best), 1e-12);
        if ((previous_best - gbest_fit) / scale > cfg.early_stop.min_rel_improvement) {
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        if (since_improvement >= cfg.early_stop.patience) break;
    }

    result.best_theta = gbest_pos;
    result.best_fitness = gbest_fit;
    return result;
}

}  // namespace ctrlforge
