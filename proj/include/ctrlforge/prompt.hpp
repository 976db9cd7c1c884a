#pragma once

#include <set>
#include <string>
#include <vector>

#include "ctrlforge/design_state.hpp"
#include "ctrlforge/metrics.hpp"

namespace ctrlforge {

// A prompt template carries {spec} {plant} {structure_doc} {feedback_doc}
// {primitive_catalog} {output_schema} placeholders and is selected by the
// feedback flags it targets. Lower priority rank wins; ties break on id.
struct PromptTemplate {
    std::string id;
    int priority = 100;
    std::set<SpecFlag> trigger_flags;  // empty = default exploration template
    std::string text;
};

class TemplateLibrary {
public:
    static TemplateLibrary builtin();
    // Plain-text template files (*.txt): "id:", "priority:", "triggers:"
    // header lines, then "---", then the body.
    static TemplateLibrary load_dir(const std::string& dir);

    const PromptTemplate& select(const std::set<SpecFlag>& flags) const;
    const PromptTemplate& exploration() const;  // the default template
    const std::vector<PromptTemplate>& all() const { return templates_; }

private:
    void add(PromptTemplate t);
    std::vector<PromptTemplate> templates_;
};

// Placeholder substitution; throws TemplateError on unknown or unresolved
// placeholders.
std::string render(const PromptTemplate& tmpl, const ProposerState& state);

std::string primitive_catalog_text();
std::string output_schema_text();
std::string plant_summary_text(const PlantParams& plant);
std::string spec_summary_text(const PerformanceSpec& spec);

}  // namespace ctrlforge
