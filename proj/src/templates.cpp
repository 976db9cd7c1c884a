#include "ctrlforge/templates.hpp"

#include "ctrlforge/errors.hpp"

namespace ctrlforge {

namespace {

struct Builder {
    ControllerStructure s;

    int node(PrimitiveNode n) {
        s.nodes.push_back(std::move(n));
        return static_cast<int>(s.nodes.size()) - 1;
    }
    int constant(double v) { return node({.kind = NodeKind::Const, .const_value = v}); }
    int param(int index) { return node({.kind = NodeKind::Param, .param_index = index}); }
    int signal(const char* name) { return node({.kind = NodeKind::Signal, .signal = name}); }
    int unary(NodeKind kind, int a) { return node({.kind = kind, .children = {a}}); }
    int binary(NodeKind kind, int a, int b) { return node({.kind = kind, .children = {a, b}}); }

    ControllerStructure done(const std::string& name, int output) {
        s.name = name;
        s.output = output;
        return std::move(s);
    }
};

ParamBounds bias_bounds() { return {0.02, 0.95}; }

// The SMC-family bias realizes the equivalent-control term, so its range
// brackets the nominal equivalent duty 1 - v_in/v_ref = 0.5 rather than the
// whole actuator range; otherwise the optimizer can repurpose the switching
// term as a two-level actuator parked at the duty floor.
ParamBounds eq_duty_bounds() { return {0.45, 0.55}; }

TemplateResult const_duty() {
    Builder b;
    const int p0 = b.param(0);
    TemplateResult r{b.done("ConstDuty", p0), {}};
    r.space.bounds = {bias_bounds()};
    return r;
}

TemplateResult pi() {
    Builder b;
    const int e = b.signal("error");
    const int prop = b.binary(NodeKind::Gain, e, b.param(0));
    const int integ = b.unary(NodeKind::Integrator, b.binary(NodeKind::Gain, e, b.param(1)));
    const int out = b.binary(NodeKind::Add, prop, integ);
    TemplateResult r{b.done("PI", out), {}};
    r.space.bounds = {{0.0, 1.0}, {0.0, 50.0}};
    return r;
}

TemplateResult pid() {
    Builder b;
    const int e = b.signal("error");
    const int prop = b.binary(NodeKind::Gain, e, b.param(0));
    const int integ = b.unary(NodeKind::Integrator, b.binary(NodeKind::Gain, e, b.param(1)));
    const int deriv = b.binary(NodeKind::FilteredDeriv, e, b.param(3));
    const int damp = b.binary(NodeKind::Gain, deriv, b.param(2));
    const int out = b.binary(NodeKind::Add, b.binary(NodeKind::Add, prop, integ), damp);
    TemplateResult r{b.done("PID", out), {}};
    r.space.bounds = {{0.0, 1.0}, {0.0, 50.0}, {0.0, 0.1}, {10.0, 5000.0}};
    return r;
}

// Sliding surface shared by SMC and AdaptiveSMC:
//   s = c1*(v_ref - v_c) - (i_l - v_c^2 / (R_nom * V_in))
int surface(Builder& b, int c1_param) {
    const int e = b.signal("error");
    const int weighted_error = b.binary(NodeKind::Gain, e, c1_param);
    const int v = b.signal("v_c");
    const int i_eq = b.binary(NodeKind::SafeDiv, b.binary(NodeKind::Mul, v, v), b.constant(2500.0));
    const int i_dev = b.binary(NodeKind::Sub, b.signal("i_l"), i_eq);
    return b.binary(NodeKind::Sub, weighted_error, i_dev);
}

TemplateResult smc() {
    Builder b;
    const int s = surface(b, b.param(0));
    const int switching = b.binary(NodeKind::Gain, b.unary(NodeKind::Sign, s), b.param(1));
    const int out = b.binary(NodeKind::Add, b.param(2), switching);
    TemplateResult r{b.done("SMC", out), {}};
    r.space.bounds = {{0.0, 20.0}, {0.1, 1.0}, eq_duty_bounds()};
    return r;
}

TemplateResult adaptive_smc() {
    Builder b;
    const int s = surface(b, b.param(0));
    const int gain = b.node({.kind = NodeKind::AdaptiveGain, .children = {s, b.param(1), b.param(2)}});
    const int sat = b.binary(NodeKind::Sat, s, b.param(3));
    const int out = b.binary(NodeKind::Add, b.param(4), b.binary(NodeKind::Mul, gain, sat));
    TemplateResult r{b.done("AdaptiveSMC", out), {}};
    r.space.bounds = {{0.0, 20.0}, {0.0, 500.0}, {0.0, 50.0}, {1e-3, 10.0}, eq_duty_bounds()};
    return r;
}

}  // namespace

TemplateResult make_template(const std::string& name) {
    if (name == "ConstDuty") return const_duty();
    if (name == "PI") return pi();
    if (name == "PID") return pid();
    if (name == "SMC") return smc();
    if (name == "AdaptiveSMC") return adaptive_smc();
    throw ConfigError("unknown controller template '" + name + "'");
}

const std::vector<std::string>& template_names() {
    static const std::vector<std::string> names = {"ConstDuty", "PI", "PID", "SMC", "AdaptiveSMC"};
    return names;
}

}  // namespace ctrlforge
