#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctrlforge/controller.hpp"
#include "ctrlforge/serialization.hpp"
#include "ctrlforge/templates.hpp"
#include "support.hpp"

using namespace ctrlforge;

namespace {

ControllerStructure const_structure(double value) {
    ControllerStructure s;
    s.name = "const";
    s.nodes.push_back({.kind = NodeKind::Const, .const_value = value});
    s.output = 0;
    return s;
}

double eval_once(const ControllerStructure& s, const ParamVector& theta,
                 const ControlSignals& signals, double dt = 50e-6) {
    InterpreterState istate = make_state(s);
    return eval_control(s, theta, signals, istate, dt);
}

}  // namespace

TEST_CASE("param_dimension counts distinct contiguous indices") {
    CHECK(param_dimension(const_structure(0.5)) == 0);
    CHECK(param_dimension(make_template("PI").structure) == 2);
    CHECK(param_dimension(make_template("SMC").structure) == 3);
    CHECK(param_dimension(make_template("AdaptiveSMC").structure) == 5);

    ControllerStructure gap;
    gap.nodes.push_back({.kind = NodeKind::Param, .param_index = 0});
    gap.nodes.push_back({.kind = NodeKind::Param, .param_index = 2});
    gap.nodes.push_back({.kind = NodeKind::Add, .children = {0, 1}});
    gap.output = 2;
    CHECK_THROWS_AS(param_dimension(gap), ValidationError);
}

TEST_CASE("validate accepts templates and reports violations") {
    for (const auto& name : template_names()) {
        const auto t = make_template(name);
        CHECK(validate(t.structure).empty());
        CHECK(t.space.dimension() == static_cast<std::size_t>(param_dimension(t.structure)));
    }

    const auto const_duty = make_template("ConstDuty");
    REQUIRE(const_duty.space.dimension() == 1);
    CHECK(const_duty.space.bounds[0].lower == 0.02);
    CHECK(const_duty.space.bounds[0].upper == 0.95);
    CHECK_THROWS_AS(make_template("NoSuchTemplate"), ConfigError);

    SUBCASE("arity mismatch") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Const, .const_value = 1.0});
        s.nodes.push_back({.kind = NodeKind::Add, .children = {0}});
        s.output = 1;
        const auto violations = validate(s);
        REQUIRE(!violations.empty());
        CHECK(violations.front().find("arity mismatch") != std::string::npos);
    }
    SUBCASE("unknown signal") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Signal, .signal = "v_out_typo"});
        s.output = 0;
        const auto violations = validate(s);
        REQUIRE(!violations.empty());
        CHECK(violations.front().find("unknown signal") != std::string::npos);
    }
    SUBCASE("cycle") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Neg, .children = {1}});
        s.nodes.push_back({.kind = NodeKind::Neg, .children = {0}});
        s.output = 0;
        const auto violations = validate(s);
        REQUIRE(!violations.empty());
        CHECK(violations.front().find("cycle") != std::string::npos);
    }
    SUBCASE("value slot must be Param or Const") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Signal, .signal = "error"});
        s.nodes.push_back({.kind = NodeKind::Gain, .children = {0, 0}});
        s.output = 1;
        const auto violations = validate(s);
        REQUIRE(!violations.empty());
        CHECK(violations.front().find("value slot") != std::string::npos);
    }
    SUBCASE("size limits") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Const, .const_value = 1.0});
        for (int i = 1; i < 20; ++i)
            s.nodes.push_back({.kind = NodeKind::Neg, .children = {i - 1}});
        s.output = 19;
        CHECK(!validate(s, {.max_nodes = 10, .max_depth = 64}).empty());
        CHECK(!validate(s, {.max_nodes = 64, .max_depth = 12}).empty());
        CHECK(validate(s, {.max_nodes = 64, .max_depth = 64}).empty());
    }
}

TEST_CASE("eval_control basics") {
    ControlSignals signals{.error = 10.0, .v_c = 90.0, .i_l = 2.0, .v_ref = 100.0,
                           .prev_duty = 0.4};

    CHECK(eval_once(const_structure(0.5), {}, signals) == 0.5);

    SUBCASE("gain of a signal") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Signal, .signal = "error"});
        s.nodes.push_back({.kind = NodeKind::Param, .param_index = 0});
        s.nodes.push_back({.kind = NodeKind::Gain, .children = {0, 1}});
        s.output = 2;
        CHECK(eval_once(s, {0.01}, signals) == doctest::Approx(0.1));
    }
    SUBCASE("sign and sat") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Const, .const_value = -3.0});
        s.nodes.push_back({.kind = NodeKind::Sign, .children = {0}});
        s.output = 1;
        CHECK(eval_once(s, {}, signals) == -1.0);

        ControllerStructure sat;
        sat.nodes.push_back({.kind = NodeKind::Const, .const_value = 0.1});
        sat.nodes.push_back({.kind = NodeKind::Const, .const_value = 0.5});
        sat.nodes.push_back({.kind = NodeKind::Sat, .children = {0, 1}});
        sat.output = 2;
        CHECK(eval_once(sat, {}, signals) == doctest::Approx(0.2));
    }
    SUBCASE("safe division floors the denominator") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Const, .const_value = 1.0});
        s.nodes.push_back({.kind = NodeKind::Const, .const_value = 0.0});
        s.nodes.push_back({.kind = NodeKind::SafeDiv, .children = {0, 1}});
        s.output = 2;
        CHECK(eval_once(s, {}, signals) == doctest::Approx(1e9));
    }
    SUBCASE("non-finite intermediate raises") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Const, .const_value = 1e308});
        s.nodes.push_back({.kind = NodeKind::Const, .const_value = 1e308});
        s.nodes.push_back({.kind = NodeKind::Mul, .children = {0, 1}});
        s.output = 2;
        CHECK_THROWS_AS(eval_once(s, {}, signals), InterpreterOverflow);
    }
}

TEST_CASE("stateful nodes") {
    const double dt = 0.1;

    SUBCASE("integrator accumulates and clamps") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Signal, .signal = "error"});
        s.nodes.push_back({.kind = NodeKind::Integrator, .children = {0}});
        s.output = 1;
        InterpreterState istate = make_state(s);
        ControlSignals signals{.error = 2.0};
        CHECK(eval_control(s, {}, signals, istate, dt) == doctest::Approx(0.2));
        CHECK(eval_control(s, {}, signals, istate, dt) == doctest::Approx(0.4));
        for (int i = 0; i < 100; ++i) eval_control(s, {}, signals, istate, dt);
        CHECK(eval_control(s, {}, signals, istate, dt) == doctest::Approx(1.0));  // clamped
        signals.error = -2.0;
        for (int i = 0; i < 200; ++i) {
            const double out = eval_control(s, {}, signals, istate, dt);
            CHECK(out >= -1.0);
            CHECK(out <= 1.0);
        }
    }
    SUBCASE("adaptive gain follows its law and stays non-negative") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Signal, .signal = "error"});
        s.nodes.push_back({.kind = NodeKind::Param, .param_index = 0});  // rate
        s.nodes.push_back({.kind = NodeKind::Param, .param_index = 1});  // leak
        s.nodes.push_back({.kind = NodeKind::AdaptiveGain, .children = {0, 1, 2}});
        s.output = 3;
        InterpreterState istate = make_state(s);
        const ParamVector theta{10.0, 1.0};
        ControlSignals signals{.error = 3.0};
        // K1 = (10*3 - 1*0)*0.1 = 3.0, K2 = 3 + (30 - 3)*0.1 = 5.7
        CHECK(eval_control(s, theta, signals, istate, dt) == doctest::Approx(3.0));
        CHECK(eval_control(s, theta, signals, istate, dt) == doctest::Approx(5.7));
        signals.error = 0.0;
        double prev = 5.7;
        for (int i = 0; i < 500; ++i) {
            const double k = eval_control(s, theta, signals, istate, dt);
            CHECK(k >= 0.0);
            CHECK(k <= prev);
            prev = k;
        }
    }
    SUBCASE("filtered derivative tracks a ramp") {
        ControllerStructure s;
        s.nodes.push_back({.kind = NodeKind::Signal, .signal = "v_c"});
        s.nodes.push_back({.kind = NodeKind::Const, .const_value = 1000.0});
        s.nodes.push_back({.kind = NodeKind::FilteredDeriv, .children = {0, 1}});
        s.output = 2;
        InterpreterState istate = make_state(s);
        double out = 0.0;
        for (int i = 0; i < 400; ++i) {
            ControlSignals signals{.v_c = 5.0 * (i + 1) * dt};  // slope 5 V/s
            out = eval_control(s, {}, signals, istate, dt);
        }
        CHECK(out == doctest::Approx(5.0).epsilon(0.01));
    }
}

TEST_CASE("stateless structures are pure; sat agrees with sign outside the layer") {
    const auto smc = make_template("SMC");
    const ParamVector theta{10.0, 0.3, 0.5};
    ControlSignals signals{.error = 5.0, .v_c = 95.0, .i_l = 3.0, .v_ref = 100.0,
                           .prev_duty = 0.5};

    InterpreterState a = make_state(smc.structure);
    InterpreterState b = make_state(smc.structure);
    const double first = eval_control(smc.structure, theta, signals, a, 50e-6);
    for (int i = 0; i < 5; ++i) eval_control(smc.structure, theta, signals, b, 50e-6);
    CHECK(first == eval_control(smc.structure, theta, signals, b, 50e-6));

    // |s| >= width implies sat(s/width) == sign(s)
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        CounterRng rng(seed, 1, 2);
        const double width = 1e-3 + rng.next_unit() * 5.0;
        const double mag = width * (1.0 + rng.next_unit() * 10.0);
        const double s_val = rng.next_unit() < 0.5 ? -mag : mag;

        ControllerStructure sat;
        sat.nodes.push_back({.kind = NodeKind::Const, .const_value = s_val});
        sat.nodes.push_back({.kind = NodeKind::Const, .const_value = width});
        sat.nodes.push_back({.kind = NodeKind::Sat, .children = {0, 1}});
        sat.output = 2;
        ControllerStructure sign;
        sign.nodes.push_back({.kind = NodeKind::Const, .const_value = s_val});
        sign.nodes.push_back({.kind = NodeKind::Sign, .children = {0}});
        sign.output = 1;
        CHECK(eval_once(sat, {}, signals) == eval_once(sign, {}, signals));
    }
}

TEST_CASE("serialization round-trips templates and rejects bad documents") {
    for (const auto& name : template_names()) {
        const auto t = make_template(name);
        CHECK(deserialize(serialize(t.structure)) == t.structure);
    }

    CHECK_THROWS_AS(deserialize("{nodes: ["), ParseError);
    CHECK_THROWS_AS(
        deserialize(R"({"name":"x","output":0,"nodes":[{"id":0,"kind":"Fuzzify"}]})"),
        ValidationError);
}

TEST_CASE("round-trip holds on 1000 random valid structures") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const ControllerStructure s = testsupport::random_structure(seed);
        CAPTURE(seed);
        REQUIRE(validate(s).empty());
        CHECK(deserialize(serialize(s)) == s);
    }
}
