#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "nag/rng.hpp"

namespace nag {

struct Node {
    std::string id;
    std::string text;

    bool operator==(const Node&) const = default;
};

struct Edge {
    std::string src;
    std::string dst;
    std::string text;

    bool operator==(const Edge&) const = default;
};

// A graph whose nodes and edges both carry raw text. Values are immutable by
// convention after construction; nothing here mutates a graph in place.
struct TextGraph {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    bool directed = false;

    bool operator==(const TextGraph&) const = default;

    int node_index(std::string_view id) const {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].id == id) {
                return static_cast<int>(i);
            }
        }
        return -1;
    }

    // Undirected neighbor lists by node index. Parallel edges appear once;
    // self-loops are skipped (a node is not its own neighbor).
    std::vector<std::vector<int>> neighbor_lists() const {
        std::vector<std::unordered_set<int>> seen(nodes.size());
        std::vector<std::vector<int>> adj(nodes.size());
        for (const Edge& e : edges) {
            const int u = node_index(e.src);
            const int v = node_index(e.dst);
            if (u < 0 || v < 0 || u == v) {
                continue;
            }
            if (seen[static_cast<std::size_t>(u)].insert(v).second) {
                adj[static_cast<std::size_t>(u)].push_back(v);
            }
            if (seen[static_cast<std::size_t>(v)].insert(u).second) {
                adj[static_cast<std::size_t>(v)].push_back(u);
            }
        }
        return adj;
    }
};

enum class IssueKind {
    duplicate_node_id,
    dangling_endpoint,
    empty_node_text,
    empty_edge_text,
    self_loop,
};

struct ValidationIssue {
    IssueKind kind;
    bool warning = false;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool empty() const { return issues.empty(); }

    // True when no error-level issue is present (warnings allowed).
    bool ok() const {
        return std::none_of(issues.begin(), issues.end(),
                            [](const ValidationIssue& i) { return !i.warning; });
    }

    int count(IssueKind kind) const {
        return static_cast<int>(std::count_if(
            issues.begin(), issues.end(),
            [kind](const ValidationIssue& i) { return i.kind == kind; }));
    }
};

namespace detail {
inline bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}
}  // namespace detail

inline ValidationReport validate_graph(const TextGraph& g) {
    ValidationReport report;
    std::unordered_map<std::string, int> ids;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const Node& n = g.nodes[i];
        if (!ids.emplace(n.id, static_cast<int>(i)).second) {
            report.issues.push_back({IssueKind::duplicate_node_id, false,
                                     "duplicate node id \"" + n.id + "\""});
        }
        if (detail::is_blank(n.text)) {
            report.issues.push_back({IssueKind::empty_node_text, false,
                                     "node \"" + n.id + "\" has empty text"});
        }
    }
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const Edge& e = g.edges[i];
        for (const std::string* endpoint : {&e.src, &e.dst}) {
            if (!ids.contains(*endpoint)) {
                report.issues.push_back({IssueKind::dangling_endpoint, false,
                                         "edge " + std::to_string(i) + " references missing node \"" +
                                             *endpoint + "\""});
            }
        }
        if (detail::is_blank(e.text)) {
            report.issues.push_back({IssueKind::empty_edge_text, false,
                                     "edge " + std::to_string(i) + " has empty text"});
        }
        if (e.src == e.dst && ids.contains(e.src)) {
            report.issues.push_back({IssueKind::self_loop, true,
                                     "edge " + std::to_string(i) + " is a self-loop on \"" + e.src + "\""});
        }
    }
    return report;
}

enum class ElementKind { node, edge };

// One entry of the unified element set: nodes and edges treated as equivalent
// units, in the order they will be serialized.
struct UnifiedElement {
    ElementKind kind;
    int ordinal;       // position in the serialization order
    int source_index;  // index into TextGraph::nodes or ::edges

    bool operator==(const UnifiedElement&) const = default;
};

struct ElementOrder {
    enum class Kind { as_given, random_with_seed, bfs_from_first_node };
    Kind kind = Kind::as_given;
    std::uint64_t seed = 0;

    static ElementOrder as_given() { return {Kind::as_given, 0}; }
    static ElementOrder random(std::uint64_t seed) { return {Kind::random_with_seed, seed}; }
    static ElementOrder bfs() { return {Kind::bfs_from_first_node, 0}; }
};

inline std::vector<UnifiedElement> unified_elements(const TextGraph& g, ElementOrder order) {
    std::vector<UnifiedElement> elements;
    elements.reserve(g.nodes.size() + g.edges.size());

    auto renumber = [&elements] {
        for (std::size_t i = 0; i < elements.size(); ++i) {
            elements[i].ordinal = static_cast<int>(i);
        }
    };

    switch (order.kind) {
        case ElementOrder::Kind::as_given:
        case ElementOrder::Kind::random_with_seed: {
            for (std::size_t i = 0; i < g.nodes.size(); ++i) {
                elements.push_back({ElementKind::node, 0, static_cast<int>(i)});
            }
            for (std::size_t i = 0; i < g.edges.size(); ++i) {
                elements.push_back({ElementKind::edge, 0, static_cast<int>(i)});
            }
            if (order.kind == ElementOrder::Kind::random_with_seed) {
                Rng rng(order.seed);
                rng.shuffle(elements);
            }
            renumber();
            return elements;
        }
        case ElementOrder::Kind::bfs_from_first_node: {
            if (g.nodes.empty()) {
                throw std::invalid_argument("bfs element order requires at least one node");
            }
            // Incident edge indices per node, in stored edge order.
            std::vector<std::vector<int>> incident(g.nodes.size());
            std::vector<std::pair<int, int>> endpoints(g.edges.size());
            for (std::size_t i = 0; i < g.edges.size(); ++i) {
                const int u = g.node_index(g.edges[i].src);
                const int v = g.node_index(g.edges[i].dst);
                if (u < 0 || v < 0) {
                    throw std::invalid_argument("bfs element order requires resolvable edge endpoints");
                }
                endpoints[i] = {u, v};
                incident[static_cast<std::size_t>(u)].push_back(static_cast<int>(i));
                if (v != u) {
                    incident[static_cast<std::size_t>(v)].push_back(static_cast<int>(i));
                }
            }
            std::vector<bool> node_seen(g.nodes.size(), false);
            std::vector<bool> edge_seen(g.edges.size(), false);
            std::deque<int> queue;
            for (std::size_t start = 0; start < g.nodes.size(); ++start) {
                if (node_seen[start]) {
                    continue;
                }
                node_seen[start] = true;
                queue.push_back(static_cast<int>(start));
                while (!queue.empty()) {
                    const int u = queue.front();
                    queue.pop_front();
                    elements.push_back({ElementKind::node, 0, u});
                    for (const int ei : incident[static_cast<std::size_t>(u)]) {
                        if (edge_seen[static_cast<std::size_t>(ei)]) {
                            continue;
                        }
                        edge_seen[static_cast<std::size_t>(ei)] = true;
                        elements.push_back({ElementKind::edge, 0, ei});
                        const auto [a, b] = endpoints[static_cast<std::size_t>(ei)];
                        const int other = (a == u) ? b : a;
                        if (!node_seen[static_cast<std::size_t>(other)]) {
                            node_seen[static_cast<std::size_t>(other)] = true;
                            queue.push_back(other);
                        }
                    }
                }
            }
            renumber();
            return elements;
        }
    }
    throw std::logic_error("unreachable element order kind");
}

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                           const std::string& path) {
    if (!obj.is_object()) {
        throw ParseError("expected object at " + path);
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError("missing field at " + path + "." + key);
    }
    return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& path) {
    const nlohmann::json& v = require_field(obj, key, path);
    if (!v.is_string()) {
        throw ParseError("expected string at " + path + "." + key);
    }
    return v.get<std::string>();
}

}  // namespace detail

// Parses the graph JSON object. Enforces the schema and the TextGraph
// invariants; violations are reported with their JSON path.
inline TextGraph graph_from_json(const nlohmann::json& j, const std::string& path = "$") {
    TextGraph g;
    const nlohmann::json& directed = detail::require_field(j, "directed", path);
    if (!directed.is_boolean()) {
        throw ParseError("expected bool at " + path + ".directed");
    }
    g.directed = directed.get<bool>();

    const nlohmann::json& nodes = detail::require_field(j, "nodes", path);
    if (!nodes.is_array()) {
        throw ParseError("expected array at " + path + ".nodes");
    }
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string npath = path + ".nodes[" + std::to_string(i) + "]";
        Node n;
        n.id = detail::require_string(nodes[i], "id", npath);
        n.text = detail::require_string(nodes[i], "text", npath);
        if (!ids.insert(n.id).second) {
            throw ParseError("duplicate node id \"" + n.id + "\" at " + npath);
        }
        g.nodes.push_back(std::move(n));
    }

    const nlohmann::json& edges = detail::require_field(j, "edges", path);
    if (!edges.is_array()) {
        throw ParseError("expected array at " + path + ".edges");
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string epath = path + ".edges[" + std::to_string(i) + "]";
        Edge e;
        e.src = detail::require_string(edges[i], "src", epath);
        e.dst = detail::require_string(edges[i], "dst", epath);
        e.text = detail::require_string(edges[i], "text", epath);
        g.edges.push_back(std::move(e));
    }

    const ValidationReport report = validate_graph(g);
    if (!report.ok()) {
        for (const ValidationIssue& issue : report.issues) {
            if (!issue.warning) {
                throw ParseError("invalid graph at " + path + ": " + issue.message);
            }
        }
    }
    return g;
}

inline TextGraph parse_graph_json(std::string_view bytes) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        // e.byte carries the offset of the failure.
        throw ParseError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return graph_from_json(j);
}

inline nlohmann::json graph_to_json(const TextGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& n : g.nodes) {
        nodes.push_back({{"id", n.id}, {"text", n.text}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& e : g.edges) {
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"text", e.text}});
    }
    return {{"directed", g.directed}, {"nodes", nodes}, {"edges", edges}};
}

inline std::string serialize_graph_json(const TextGraph& g) { return graph_to_json(g).dump(); }

}  // namespace nag
