#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>

#include "ctrlforge/pso.hpp"

using namespace ctrlforge;

namespace {

double sphere(const ParamVector& x) {
    double sum = 0.0;
    for (double v : x) sum += v * v;
    return sum;
}

ParamSpace box(std::size_t dim, double lo, double hi) {
    ParamSpace space;
    space.bounds.assign(dim, {lo, hi});
    return space;
}

}  // namespace

TEST_CASE("sphere in 2-D reaches 1e-4") {
    PsoConfig cfg;
    cfg.swarm_size = 30;
    cfg.max_iters = 100;
    cfg.seed = 42;
    cfg.early_stop.patience = 100;  // run the full budget
    const PsoResult result = optimize(sphere, box(2, -5.0, 5.0), cfg);
    CHECK(result.best_fitness < 1e-4);
    CHECK(result.evaluations <= 30L * 101L);
}

TEST_CASE("1-D quadratic recovers the analytic optimum") {
    PsoConfig cfg;
    cfg.seed = 7;
    const auto f = [](const ParamVector& x) { return (x[0] - 3.0) * (x[0] - 3.0); };
    const PsoResult result = optimize(f, box(1, 0.0, 10.0), cfg);
    CHECK(result.best_theta[0] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("degenerate bounds collapse to the single feasible point") {
    ParamSpace space;
    space.bounds = {{2.5, 2.5}, {-1.0, -1.0}};
    PsoConfig cfg;
    cfg.max_iters = 5;
    const PsoResult result = optimize(sphere, space, cfg);
    CHECK(result.best_theta[0] == 2.5);
    CHECK(result.best_theta[1] == -1.0);
}

TEST_CASE("gbest history is non-increasing across seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        PsoConfig cfg;
        cfg.swarm_size = 10;
        cfg.max_iters = 20;
        cfg.seed = seed;
        const PsoResult result = optimize(sphere, box(3, -4.0, 4.0), cfg);
        CAPTURE(seed);
        REQUIRE(!result.history.empty());
        CHECK(result.best_fitness == result.history.back());
        for (std::size_t i = 1; i < result.history.size(); ++i)
            CHECK(result.history[i] <= result.history[i - 1]);
    }
}

TEST_CASE("feasibility: every evaluated position stays in bounds") {
    const ParamSpace space = box(2, -1.0, 2.0);
    std::atomic<bool> ok{true};
    const auto f = [&](const ParamVector& x) {
        for (double v : x)
            if (v < -1.0 || v > 2.0) ok = false;
        return sphere(x);
    };
    PsoConfig cfg;
    cfg.max_iters = 30;
    optimize(f, space, cfg);
    CHECK(ok);
}

TEST_CASE("reproducibility: same seed, same result, workers do not matter") {
    PsoConfig cfg;
    cfg.swarm_size = 12;
    cfg.max_iters = 25;
    cfg.seed = 1234;

    cfg.workers = 1;
    const PsoResult a = optimize(sphere, box(3, -2.0, 2.0), cfg);
    const PsoResult b = optimize(sphere, box(3, -2.0, 2.0), cfg);
    cfg.workers = 4;
    const PsoResult c = optimize(sphere, box(3, -2.0, 2.0), cfg);

    CHECK(a.best_fitness == b.best_fitness);
    CHECK(a.best_theta == b.best_theta);
    CHECK(a.history == b.history);
    CHECK(a.best_fitness == c.best_fitness);
    CHECK(a.best_theta == c.best_theta);
    CHECK(a.history == c.history);

    cfg.seed = 1235;
    const PsoResult d = optimize(sphere, box(3, -2.0, 2.0), cfg);
    CHECK(a.best_theta != d.best_theta);
}

TEST_CASE("evaluate_swarm: order, errors, and parallel equality") {
    CHECK(evaluate_swarm({}, sphere).empty());

    const std::vector<ParamVector> single{{1.5, 2.0}};
    CHECK(evaluate_swarm(single, sphere)[0] == doctest::Approx(sphere(single[0])));

    std::vector<ParamVector> particles;
    for (int i = 0; i < 30; ++i) particles.push_back({double(i), double(i) / 2.0});
    const auto seq = evaluate_swarm(particles, sphere, 1);
    const auto par = evaluate_swarm(particles, sphere, 8);
    CHECK(seq == par);
    for (std::size_t i = 0; i < particles.size(); ++i)
        CHECK(seq[i] == doctest::Approx(sphere(particles[i])));

    // Throwing and non-finite fitness become the penalty value.
    const auto faulty = [](const ParamVector& x) -> double {
        if (x[0] > 10.0) throw std::runtime_error("diverged");
        if (x[0] > 5.0) return std::nan("");
        return x[0];
    };
    const auto vals = evaluate_swarm({{1.0}, {7.0}, {20.0}}, faulty, 1, 1e6);
    CHECK(vals[0] == 1.0);
    CHECK(vals[1] == 1e6);
    CHECK(vals[2] == 1e6);
}

TEST_CASE("early stop halts a stagnant swarm before the full budget") {
    PsoConfig cfg;
    cfg.swarm_size = 8;
    cfg.max_iters = 200;
    cfg.early_stop = {5, 0.001};
    const auto constant = [](const ParamVector&) { return 1.0; };
    const PsoResult result = optimize(constant, box(2, 0.0, 1.0), cfg);
    CHECK(result.history.size() <= 7);  // init + patience iterations
}

TEST_CASE("config validation") {
    PsoConfig cfg;
    cfg.swarm_size = 1;
    CHECK_THROWS_AS(cfg.check(), ConfigError);
    cfg = {};
    cfg.velocity_clamp_frac = 0.0;
    CHECK_THROWS_AS(cfg.check(), ConfigError);
    ParamSpace inverted;
    inverted.bounds = {{1.0, 0.0}};
    CHECK_THROWS_AS(optimize(sphere, inverted, PsoConfig{}), ConfigError);
}
