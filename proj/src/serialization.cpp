#include "ctrlforge/serialization.hpp"

#include <map>

namespace ctrlforge {

using nlohmann::json;

json structure_to_json(const ControllerStructure& s) {
    json nodes = json::array();
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        const auto& n = s.nodes[i];
        json node;
        node["id"] = i;
        node["kind"] = std::string(to_string(n.kind));
        node["children"] = n.children;
        if (n.kind == NodeKind::Const) node["const_value"] = n.const_value;
        if (n.kind == NodeKind::Param) node["param_index"] = n.param_index;
        if (n.kind == NodeKind::Signal) node["signal"] = n.signal;
        nodes.push_back(std::move(node));
    }
    return json{{"name", s.name}, {"output", s.output}, {"nodes", std::move(nodes)}};
}

ControllerStructure structure_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("structure document must be an object");
    if (!doc.contains("nodes") || !doc["nodes"].is_array())
        throw ParseError("structure document is missing a 'nodes' array");
    if (!doc.contains("output")) throw ParseError("structure document is missing 'output'");

    ControllerStructure s;
    s.name = doc.value("name", std::string("unnamed"));

    // First pass: map arbitrary ids onto dense indices in listed order.
    std::map<long, int> index_of;
    const auto& nodes = doc["nodes"];
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (!n.is_object() || !n.contains("id") || !n["id"].is_number_integer())
            throw ParseError("node " + std::to_string(i) + " is missing an integer 'id'");
        const long id = n["id"].get<long>();
        if (!index_of.emplace(id, static_cast<int>(i)).second)
            throw ParseError("duplicate node id " + std::to_string(id));
    }

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (!n.contains("kind") || !n["kind"].is_string())
            throw ParseError("node " + std::to_string(i) + " is missing 'kind'");
        const std::string kind_name = n["kind"].get<std::string>();
        const auto kind = node_kind_from(kind_name);
        if (!kind) throw ValidationError("unknown primitive '" + kind_name + "'");

        PrimitiveNode node;
        node.kind = *kind;
        if (n.contains("children")) {
            if (!n["children"].is_array())
                throw ParseError("node " + std::to_string(i) + ": 'children' must be an array");
            for (const auto& child : n["children"]) {
                if (!child.is_number_integer())
                    throw ParseError("node " + std::to_string(i) + ": child ids must be integers");
                const auto it = index_of.find(child.get<long>());
                if (it == index_of.end())
                    throw ValidationError("node " + std::to_string(i) +
                                          " references unknown child id " +
                                          child.dump());
                node.children.push_back(it->second);
            }
        }
        if (node.kind == NodeKind::Const) {
            if (!n.contains("const_value") || !n["const_value"].is_number())
                throw ParseError("Const node " + std::to_string(i) + " needs 'const_value'");
            node.const_value = n["const_value"].get<double>();
        }
        if (node.kind == NodeKind::Param) {
            if (!n.contains("param_index") || !n["param_index"].is_number_integer())
                throw ParseError("Param node " + std::to_string(i) + " needs 'param_index'");
            node.param_index = n["param_index"].get<int>();
        }
        if (node.kind == NodeKind::Signal) {
            if (!n.contains("signal") || !n["signal"].is_string())
                throw ParseError("Signal node " + std::to_string(i) + " needs 'signal'");
            node.signal = n["signal"].get<std::string>();
        }
        s.nodes.push_back(std::move(node));
    }

    if (!doc["output"].is_number_integer()) throw ParseError("'output' must be a node id");
    const auto out = index_of.find(doc["output"].get<long>());
    if (out == index_of.end()) throw ValidationError("output references unknown node id");
    s.output = out->second;
    return s;
}

std::string serialize(const ControllerStructure& s) {
    return structure_to_json(s).dump(2);
}

ControllerStructure deserialize(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    ControllerStructure s = structure_from_json(doc);
    const auto violations = validate(s);
    if (!violations.empty()) {
        std::string msg = "invalid structure:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw ValidationError(msg);
    }
    return s;
}

}  // namespace ctrlforge
