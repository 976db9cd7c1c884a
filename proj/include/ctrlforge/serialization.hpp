#pragma once

#include <string>

#include <json.hpp>

#include "ctrlforge/controller.hpp"

namespace ctrlforge {

// Canonical structure document:
//   {"name": ..., "output": <id>, "nodes": [{"id", "kind", "children",
//    "param_index"?, "const_value"?, "signal"?}, ...]}
// Node ids are arbitrary unique integers; serialization emits ids equal to
// node indices.
nlohmann::json structure_to_json(const ControllerStructure& s);
ControllerStructure structure_from_json(const nlohmann::json& doc);

std::string serialize(const ControllerStructure& s);
// Throws ParseError (with position) on malformed text and ValidationError
// when the parsed structure violates the primitive library rules.
ControllerStructure deserialize(const std::string& text);

}  // namespace ctrlforge
