#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "ctrlforge/plant.hpp"
#include "ctrlforge/templates.hpp"
#include "support.hpp"

using namespace ctrlforge;

namespace {

const PlantParams kPlant{};  // the bundled boost problem defaults

Scenario step_scenario() {
    Scenario s = Scenario::nominal(kPlant, 1.0);
    s.load_events = {{0.25, 100.0}, {0.5, 50.0}};
    return s;
}

ControlLaw const_duty(double d) {
    return [d](const ControlSignals&, double) { return d; };
}

double tail_mean(const std::vector<double>& xs, std::size_t begin, std::size_t end) {
    double sum = 0.0;
    for (std::size_t k = begin; k < end; ++k) sum += xs[k];
    return sum / (end - begin);
}

}  // namespace

TEST_CASE("derivatives: equilibria and plug-in values") {
    // Equilibrium of the averaged model at d=0.5, R=50.
    auto d = derivatives({4.0, 100.0, 0.0}, 0.5, 50.0, kPlant);
    CHECK(d.di_l_dt == doctest::Approx(0.0));
    CHECK(d.dv_c_dt == doctest::Approx(0.0));

    // Power-balance equilibrium i_l = v_c / ((1-d) R) at R=100.
    d = derivatives({2.0, 100.0, 0.0}, 0.5, 100.0, kPlant);
    CHECK(d.di_l_dt == doctest::Approx(0.0));
    CHECK(d.dv_c_dt == doctest::Approx(0.0));

    d = derivatives({0.0, 0.0, 0.0}, 0.0, 50.0, kPlant);
    CHECK(d.di_l_dt == doctest::Approx(50000.0));  // v_in / L
    CHECK(d.dv_c_dt == doctest::Approx(0.0));
}

TEST_CASE("step: identity cases and the diode guard") {
    const PlantState eq{4.0, 100.0, 0.0};
    const PlantState next = step(eq, 0.5, 50.0, 1e-3, kPlant);
    CHECK(next.i_l == doctest::Approx(4.0));
    CHECK(next.v_c == doctest::Approx(100.0));
    CHECK(next.t == doctest::Approx(1e-3));

    // dt -> 0 keeps the state.
    const PlantState tiny = step(eq, 0.5, 50.0, 1e-15, kPlant);
    CHECK(tiny.i_l == doctest::Approx(4.0));
    CHECK(tiny.v_c == doctest::Approx(100.0));

    // Strong reverse drive would push i_l negative; the guard holds it at 0.
    const PlantState rev = step({0.01, 200.0, 0.0}, 0.02, 50.0, 50e-6, kPlant);
    CHECK(rev.i_l == 0.0);
}

TEST_CASE("step agrees with a fine-step Euler reference over one substep") {
    const PlantState start{0.0, 50.0, 0.0};
    const PlantState ours = step(start, 0.5, 50.0, 5e-6, kPlant);
    const PlantState ref = testsupport::euler_reference(start, 0.5, 50.0, 5e-6, 10e-9, kPlant);
    CHECK(ours.i_l == doctest::Approx(ref.i_l).epsilon(1e-4));
    CHECK(ours.v_c == doctest::Approx(ref.v_c).epsilon(1e-4));
}

TEST_CASE("RK4 convergence: halving dt cuts the error by >= 12 on a smooth segment") {
    // Start near equilibrium so the diode guard never engages.
    const PlantState start{4.2, 101.0, 0.0};
    const double horizon = 2e-3;
    const PlantState ref = testsupport::rk4_at(start, 0.5, 50.0, horizon, 1e-7, kPlant);
    const PlantState coarse = testsupport::rk4_at(start, 0.5, 50.0, horizon, 100e-6, kPlant);
    const PlantState fine = testsupport::rk4_at(start, 0.5, 50.0, horizon, 50e-6, kPlant);

    const auto err = [&](const PlantState& s) {
        return std::hypot(s.i_l - ref.i_l, s.v_c - ref.v_c);
    };
    CHECK(err(coarse) / err(fine) >= 12.0);
}

TEST_CASE("divergence guard aborts runaway states") {
    CHECK_THROWS_AS(step({1e5, 9.9e5, 0.0}, 0.95, 1e-4, 1.0, kPlant), SimulationDiverged);
}

TEST_CASE("simulate: constant duty reaches the averaged-model steady state") {
    const Scenario scenario = Scenario::nominal(kPlant, 1.0);
    const SimConfig cfg;

    SUBCASE("d = 0.5 settles to 100 V") {
        const Trajectory traj = simulate(const_duty(0.5), scenario, cfg);
        CHECK(traj.size() == 20000);
        CHECK(traj.v_c.back() == doctest::Approx(100.0).epsilon(0.005));
        // Lossless power balance after transients: v_in*i_l == v_c^2/R.
        const double pin = kPlant.v_in * traj.i_l.back();
        const double pout = traj.v_c.back() * traj.v_c.back() / 50.0;
        CHECK(pin == doctest::Approx(pout).epsilon(0.001));
        // Diode guard holds everywhere.
        for (double i : traj.i_l) CHECK(i >= 0.0);
    }
    SUBCASE("duty request 0 is clamped to duty_min") {
        const Trajectory traj = simulate(const_duty(0.0), scenario, cfg);
        CHECK(traj.duty.front() == doctest::Approx(cfg.duty_min));
        CHECK(traj.v_c.back() == doctest::Approx(kPlant.v_in / (1.0 - cfg.duty_min)).epsilon(0.01));
    }
}

TEST_CASE("simulate: load steps move the equilibrium current") {
    const Trajectory traj = simulate(const_duty(0.5), step_scenario(), SimConfig{});
    REQUIRE(traj.size() == 20000);
    // Tail of the 50-ohm segment before the first event: i_l ~ 4 A.
    CHECK(tail_mean(traj.i_l, 4000, 5000) == doctest::Approx(4.0).epsilon(0.02));
    // Tail of the 100-ohm window: i_l ~ 2 A.
    CHECK(tail_mean(traj.i_l, 9000, 10000) == doctest::Approx(2.0).epsilon(0.02));
    // Load column follows the events.
    CHECK(traj.r_load[4999] == 50.0);
    CHECK(traj.r_load[5000] == 100.0);
    CHECK(traj.r_load[10000] == 50.0);
}

TEST_CASE("simulate: structure interface checks theta and is deterministic") {
    const auto smc = make_template("SMC");
    const Scenario scenario = Scenario::nominal(kPlant, 0.05);
    const SimConfig cfg;

    CHECK_THROWS_WITH_AS(simulate(smc.structure, {0.1}, scenario, cfg),
                         "expected d_theta=3, got 1", ValidationError);

    const ParamVector theta{10.0, 0.2, 0.5};
    const Trajectory a = simulate(smc.structure, theta, scenario, cfg);
    const Trajectory b = simulate(smc.structure, theta, scenario, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a.v_c[k] == b.v_c[k]);
        CHECK(a.duty[k] == b.duty[k]);
    }
}

TEST_CASE("trajectory CSV round-trips at 9 significant digits") {
    Scenario scenario = Scenario::nominal(kPlant, 0.01);
    const Trajectory traj = simulate(const_duty(0.45), scenario, SimConfig{});

    std::ostringstream out;
    write_trajectory_csv(traj, out);
    std::istringstream in(out.str());
    const Trajectory back = read_trajectory_csv(in);

    REQUIRE(back.size() == traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        CHECK(back.t[k] == doctest::Approx(traj.t[k]).epsilon(1e-8));
        CHECK(back.v_c[k] == doctest::Approx(traj.v_c[k]).epsilon(1e-8));
        CHECK(back.i_l[k] == doctest::Approx(traj.i_l[k]).epsilon(1e-8));
        CHECK(back.duty[k] == doctest::Approx(traj.duty[k]).epsilon(1e-8));
    }

    // Byte determinism: same inputs, same CSV.
    std::ostringstream again;
    write_trajectory_csv(simulate(const_duty(0.45), scenario, SimConfig{}), again);
    CHECK(out.str() == again.str());
}

TEST_CASE("scenario validation") {
    Scenario s = Scenario::nominal(kPlant, 1.0);
    s.load_events = {{0.5, 100.0}, {0.25, 50.0}};
    CHECK_THROWS_AS(s.check(), ConfigError);
    s.load_events = {{0.25, -5.0}};
    CHECK_THROWS_AS(s.check(), ConfigError);

    PlantParams bad = kPlant;
    bad.l = -1.0;
    CHECK_THROWS_AS(bad.check(), ConfigError);
    bad = kPlant;
    bad.v_ref = 40.0;  // not a boost operating point
    CHECK_THROWS_AS(bad.check(), ConfigError);
}
