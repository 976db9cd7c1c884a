#include "ctrlforge/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctrlforge/serialization.hpp"

namespace ctrlforge {

namespace {

constexpr const char* kPlaceholders[] = {"spec",         "plant",
                                         "structure_doc", "feedback_doc",
                                         "primitive_catalog", "output_schema"};

const char* kBodyHeader =
    "You are designing the control law for a DC-DC boost converter.\n"
    "Plant:\n{plant}\n"
    "Targets:\n{spec}\n"
    "Current controller structure (JSON document):\n{structure_doc}\n"
    "Latest evaluation feedback:\n{feedback_doc}\n";

const char* kBodyFooter =
    "\nAvailable primitives:\n{primitive_catalog}\n"
    "{output_schema}\n";

std::string body(const std::string& middle) {
    return std::string(kBodyHeader) + middle + kBodyFooter;
}

}  // namespace

void TemplateLibrary::add(PromptTemplate t) {
    for (const auto& existing : templates_)
        if (existing.id == t.id) throw ConfigError("duplicate prompt template id '" + t.id + "'");
    for (const char* placeholder : kPlaceholders) {
        if (t.text.find("{" + std::string(placeholder) + "}") == std::string::npos)
            throw ConfigError("prompt template '" + t.id + "' is missing the {" +
                              std::string(placeholder) + "} placeholder");
    }
    templates_.push_back(std::move(t));
}

TemplateLibrary TemplateLibrary::builtin() {
    TemplateLibrary lib;
    lib.add({"diverged", 1, {SpecFlag::Diverged},
             body("The last candidate made the closed loop diverge. Propose a conservative "
                  "modification of the structure that keeps authority bounded: prefer saturated "
                  "switching terms, smaller gain paths, and avoid pure high-gain feedback. "
                  "Return one modified structure.")});
    lib.add({"chattering", 5, {SpecFlag::ChatteringDetected},
             body("The duty command chatters: its total variation is far above the acceptable "
                  "level because a discontinuous switching term is active. Replace Sign with a "
                  "Sat boundary layer (tunable width) and make the switching gain adaptive "
                  "(AdaptiveGain driven by the sliding variable) so the gain decays when the "
                  "loop is quiet. Return one modified structure.")});
    lib.add({"steady_state_error", 10, {SpecFlag::SseExceeded},
             body("The loop parks away from the reference: steady-state error exceeds the "
                  "target. Add integral action on the error signal at an appropriate point "
                  "(an Integrator over a tunable Gain of the error) so the residual error is "
                  "driven out. Return one modified structure.")});
    lib.add({"overshoot", 20, {SpecFlag::OvershootExceeded},
             body("The transient overshoots the reference beyond the target. Add damping: a "
                  "FilteredDeriv path on the output voltage subtracted from the duty command, "
                  "or restructure so the transient authority is reduced without hurting "
                  "steady-state accuracy. Return one modified structure.")});
    lib.add({"settling", 40, {SpecFlag::SettlingSlow},
             body("The response never settles into the tolerance band. Add a feedforward bias "
                  "term (a free parameter added to the duty command) so the law centers on the "
                  "operating point, and keep corrective paths for the transients. Return one "
                  "modified structure.")});
    lib.add({"explore", 100, {},
             body("All hard targets are currently limited by the structure itself rather than "
                  "its parameters. Propose a different controller structure worth optimizing "
                  "next; favor structures that are qualitatively different from the current "
                  "one. Return one structure.")});
    return lib;
}

TemplateLibrary TemplateLibrary::load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("prompt template directory not found: " + dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no .txt prompt templates in " + dir);

    TemplateLibrary lib;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw ConfigError("cannot read prompt template " + file.string());
        PromptTemplate t;
        t.id = file.stem().string();
        std::string line;
        bool saw_separator = false;
        std::ostringstream text;
        while (std::getline(in, line)) {
            if (!saw_separator) {
                if (line == "---") {
                    saw_separator = true;
                    continue;
                }
                const auto colon = line.find(':');
                if (colon == std::string::npos)
                    throw ConfigError(file.string() + ": expected 'key: value' header or '---'");
                const std::string key = line.substr(0, colon);
                std::string value = line.substr(colon + 1);
                value.erase(0, value.find_first_not_of(" \t"));
                if (key == "id") {
                    t.id = value;
                } else if (key == "priority") {
                    t.priority = std::stoi(value);
                } else if (key == "triggers") {
                    std::istringstream list(value);
                    std::string name;
                    while (std::getline(list, name, ',')) {
                        name.erase(0, name.find_first_not_of(" \t"));
                        name.erase(name.find_last_not_of(" \t") + 1);
                        if (name.empty()) continue;
                        bool known = false;
                        for (SpecFlag f :
                             {SpecFlag::OvershootExceeded, SpecFlag::SseExceeded,
                              SpecFlag::ChatteringDetected, SpecFlag::Diverged,
                              SpecFlag::SettlingSlow}) {
                            if (name == to_string(f)) {
                                t.trigger_flags.insert(f);
                                known = true;
                            }
                        }
                        if (!known)
                            throw ConfigError(file.string() + ": unknown trigger flag '" + name +
                                              "'");
                    }
                } else {
                    throw ConfigError(file.string() + ": unknown header key '" + key + "'");
                }
            } else {
                text << line << '\n';
            }
        }
        if (!saw_separator)
            throw ConfigError(file.string() + ": missing '---' separator before the body");
        t.text = text.str();
        lib.add(std::move(t));
    }
    lib.exploration();  // must exist
    return lib;
}

const PromptTemplate& TemplateLibrary::exploration() const {
    const PromptTemplate* best = nullptr;
    for (const auto& t : templates_) {
        if (!t.trigger_flags.empty()) continue;
        if (!best || t.priority < best->priority || (t.priority == best->priority && t.id < best->id))
            best = &t;
    }
    if (!best) throw ConfigError("prompt template library has no default exploration template");
    return *best;
}

const PromptTemplate& TemplateLibrary::select(const std::set<SpecFlag>& flags) const {
    const PromptTemplate* best = nullptr;
    for (const auto& t : templates_) {
        bool matches = false;
        for (SpecFlag f : t.trigger_flags) matches = matches || flags.contains(f);
        if (!matches) continue;
        if (!best || t.priority < best->priority ||
            (t.priority == best->priority && t.id < best->id))
            best = &t;
    }
    return best ? *best : exploration();
}

std::string render(const PromptTemplate& tmpl, const ProposerState& state) {
    const std::string feedback_doc =
        state.feedback_history.empty()
            ? std::string("(no feedback yet)")
            : feedback_to_json(state.feedback_history.back()).dump(2);

    const std::pair<std::string, std::string> values[] = {
        {"spec", spec_summary_text(state.spec)},
        {"plant", plant_summary_text(state.plant)},
        {"structure_doc", serialize(state.current_structure)},
        {"feedback_doc", feedback_doc},
        {"primitive_catalog", primitive_catalog_text()},
        {"output_schema", output_schema_text()},
    };

    std::string out;
    out.reserve(tmpl.text.size() * 2);
    for (std::size_t i = 0; i < tmpl.text.size();) {
        if (tmpl.text[i] != '{') {
            out += tmpl.text[i++];
            continue;
        }
        std::size_t j = i + 1;
        while (j < tmpl.text.size() &&
               (std::islower(static_cast<unsigned char>(tmpl.text[j])) || tmpl.text[j] == '_'))
            ++j;
        if (j >= tmpl.text.size() || tmpl.text[j] != '}' || j == i + 1) {
            out += tmpl.text[i++];  // literal brace
            continue;
        }
        const std::string name = tmpl.text.substr(i + 1, j - i - 1);
        bool found = false;
        for (const auto& [key, value] : values) {
            if (key == name) {
                out += value;
                found = true;
                break;
            }
        }
        if (!found)
            throw TemplateError("template '" + tmpl.id + "': unresolved placeholder {" + name +
                                "}");
        i = j + 1;
    }
    return out;
}

std::string primitive_catalog_text() {
    return "Const(const_value)        fixed number\n"
           "Param(param_index)        tunable parameter, indices 0..d-1\n"
           "Signal(signal)            one of error, v_c, i_l, v_ref, prev_duty\n"
           "Add(a,b) Sub(a,b) Mul(a,b) Min(a,b) Max(a,b)\n"
           "SafeDiv(a,b)              division, |denominator| floored at 1e-9\n"
           "Neg(a) Abs(a) Sign(a)\n"
           "Sat(a,width)              clamp(a/width,-1,1); width must be Param or Const\n"
           "Integrator(a)             accumulates a*dt, clamped anti-windup\n"
           "FilteredDeriv(a,cutoff)   filtered d/dt; cutoff rad/s, Param or Const\n"
           "Gain(a,k)                 a*k; k must be Param or Const\n"
           "AdaptiveGain(s,rate,leak) gain K with K' = rate*|s| - leak*K, K >= 0\n"
           "Limits: at most 64 nodes, depth 12, one output node.\n";
}

std::string output_schema_text() {
    return "Reply with exactly one JSON structure document:\n"
           "{\"name\": \"...\", \"output\": <node id>, \"nodes\": [\n"
           "  {\"id\": 0, \"kind\": \"Signal\", \"children\": [], \"signal\": \"error\"},\n"
           "  {\"id\": 1, \"kind\": \"Param\", \"children\": [], \"param_index\": 0},\n"
           "  {\"id\": 2, \"kind\": \"Gain\", \"children\": [0, 1]}\n"
           "]}\n"
           "Children reference node ids; parameter indices must be contiguous from 0.\n";
}

std::string plant_summary_text(const PlantParams& plant) {
    std::ostringstream os;
    os << "DC-DC boost converter (averaged model): V_in = " << plant.v_in
       << " V, target V_out = " << plant.v_ref << " V, L = " << plant.l * 1e3
       << " mH, C = " << plant.c * 1e6 << " uF, nominal load = " << plant.r_load_nominal
       << " ohm, switching frequency = " << plant.f_sw / 1e3 << " kHz.";
    return os.str();
}

std::string spec_summary_text(const PerformanceSpec& spec) {
    std::ostringstream os;
    os << "overshoot < " << spec.max_overshoot_pct << "%, steady-state error < " << spec.max_sse_pct
       << "% of the reference, settling band " << spec.settling_band_pct
       << "%, duty total variation at most " << spec.chattering_threshold << ".";
    return os.str();
}

}  // namespace ctrlforge
