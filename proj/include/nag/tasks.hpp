#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nag/graph.hpp"

namespace nag {

enum class TaskKind {
    node_count,
    edge_count,
    cycle_check,
    triangle_count,
    node_degree,
    connected_nodes,
    reachability,
    edge_existence,
    shortest_path,
};

inline constexpr std::array<TaskKind, 9> kAllTasks = {
    TaskKind::node_count,   TaskKind::edge_count,  TaskKind::cycle_check,
    TaskKind::triangle_count, TaskKind::node_degree, TaskKind::connected_nodes,
    TaskKind::reachability, TaskKind::edge_existence, TaskKind::shortest_path,
};

inline const char* task_name(TaskKind task) {
    switch (task) {
        case TaskKind::node_count: return "node-count";
        case TaskKind::edge_count: return "edge-count";
        case TaskKind::cycle_check: return "cycle-check";
        case TaskKind::triangle_count: return "triangle-count";
        case TaskKind::node_degree: return "node-degree";
        case TaskKind::connected_nodes: return "connected-nodes";
        case TaskKind::reachability: return "reachability";
        case TaskKind::edge_existence: return "edge-existence";
        case TaskKind::shortest_path: return "shortest-path";
    }
    throw std::logic_error("unreachable task kind");
}

inline std::optional<TaskKind> task_from_name(std::string_view name) {
    for (const TaskKind t : kAllTasks) {
        if (name == task_name(t)) {
            return t;
        }
    }
    return std::nullopt;
}

// How many focus nodes a task's question must mention.
inline int task_focus_arity(TaskKind task) {
    switch (task) {
        case TaskKind::node_degree:
        case TaskKind::connected_nodes:
            return 1;
        case TaskKind::reachability:
        case TaskKind::edge_existence:
        case TaskKind::shortest_path:
            return 2;
        default:
            return 0;
    }
}

inline bool task_is_numeric(TaskKind task) {
    switch (task) {
        case TaskKind::node_count:
        case TaskKind::edge_count:
        case TaskKind::triangle_count:
        case TaskKind::node_degree:
        case TaskKind::shortest_path:
            return true;
        default:
            return false;
    }
}

// Exact answer of a task oracle, with its canonical text rendering.
struct OracleAnswer {
    enum class Type { integer, boolean, name_set, no_path };

    Type type = Type::integer;
    long long number = 0;
    bool truth = false;
    std::vector<std::string> names;  // sorted, unique

    static OracleAnswer of_int(long long v) { return {Type::integer, v, false, {}}; }
    static OracleAnswer of_bool(bool v) { return {Type::boolean, 0, v, {}}; }
    static OracleAnswer of_names(std::vector<std::string> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return {Type::name_set, 0, false, std::move(v)};
    }
    static OracleAnswer no_path() { return {Type::no_path, 0, false, {}}; }

    // Integers in decimal, booleans as Yes/No, name sets comma-separated in
    // lexicographic order, unreachable pairs as "no path".
    std::string render() const {
        switch (type) {
            case Type::integer: return std::to_string(number);
            case Type::boolean: return truth ? "Yes" : "No";
            case Type::no_path: return "no path";
            case Type::name_set: {
                std::string out;
                for (std::size_t i = 0; i < names.size(); ++i) {
                    if (i > 0) {
                        out += ", ";
                    }
                    out += names[i];
                }
                return out;
            }
        }
        throw std::logic_error("unreachable answer type");
    }
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) {
            parent[i] = static_cast<int>(i);
        }
    }

    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }

    // Returns false if already in the same component.
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        parent[static_cast<std::size_t>(a)] = b;
        return true;
    }
};

// BFS distances from src over the undirected view; -1 = unreachable.
inline std::vector<int> bfs_distances(const TextGraph& g, int src) {
    const auto adj = g.neighbor_lists();
    std::vector<int> dist(g.nodes.size(), -1);
    std::deque<int> queue;
    dist[static_cast<std::size_t>(src)] = 0;
    queue.push_back(src);
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (const int v : adj[static_cast<std::size_t>(u)]) {
            if (dist[static_cast<std::size_t>(v)] < 0) {
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

}  // namespace detail

// Solves a task exactly with standard graph algorithms. `focus` carries node
// ids (not texts): one id for node-degree/connected-nodes, two for the pair
// tasks, empty otherwise.
inline OracleAnswer solve_task(const TextGraph& g, TaskKind task,
                               const std::vector<std::string>& focus = {}) {
    const int arity = task_focus_arity(task);
    if (static_cast<int>(focus.size()) < arity) {
        throw std::invalid_argument(std::string("task ") + task_name(task) + " requires " +
                                    std::to_string(arity) + " focus node(s)");
    }
    std::vector<int> f;
    for (int i = 0; i < arity; ++i) {
        const int idx = g.node_index(focus[static_cast<std::size_t>(i)]);
        if (idx < 0) {
            throw std::invalid_argument("focus node \"" + focus[static_cast<std::size_t>(i)] +
                                        "\" not in graph");
        }
        f.push_back(idx);
    }

    switch (task) {
        case TaskKind::node_count:
            return OracleAnswer::of_int(static_cast<long long>(g.nodes.size()));
        case TaskKind::edge_count:
            return OracleAnswer::of_int(static_cast<long long>(g.edges.size()));
        case TaskKind::cycle_check: {
            // Union-find over the undirected view; self-loops and parallel
            // edges both close a cycle.
            detail::UnionFind uf(g.nodes.size());
            for (const Edge& e : g.edges) {
                const int u = g.node_index(e.src);
                const int v = g.node_index(e.dst);
                if (u == v || !uf.unite(u, v)) {
                    return OracleAnswer::of_bool(true);
                }
            }
            return OracleAnswer::of_bool(false);
        }
        case TaskKind::triangle_count: {
            const auto adj = g.neighbor_lists();
            const int n = static_cast<int>(g.nodes.size());
            std::vector<std::vector<bool>> a(static_cast<std::size_t>(n),
                                             std::vector<bool>(static_cast<std::size_t>(n), false));
            for (int u = 0; u < n; ++u) {
                for (const int v : adj[static_cast<std::size_t>(u)]) {
                    a[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = true;
                }
            }
            long long count = 0;
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    if (!a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
                        continue;
                    }
                    for (int k = j + 1; k < n; ++k) {
                        if (a[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] &&
                            a[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]) {
                            ++count;
                        }
                    }
                }
            }
            return OracleAnswer::of_int(count);
        }
        case TaskKind::node_degree: {
            // Endpoint count; a self-loop contributes two.
            long long degree = 0;
            const std::string& id = g.nodes[static_cast<std::size_t>(f[0])].id;
            for (const Edge& e : g.edges) {
                degree += (e.src == id) + (e.dst == id);
            }
            return OracleAnswer::of_int(degree);
        }
        case TaskKind::connected_nodes: {
            const auto adj = g.neighbor_lists();
            std::vector<std::string> names;
            for (const int v : adj[static_cast<std::size_t>(f[0])]) {
                names.push_back(g.nodes[static_cast<std::size_t>(v)].text);
            }
            return OracleAnswer::of_names(std::move(names));
        }
        case TaskKind::reachability: {
            const auto dist = detail::bfs_distances(g, f[0]);
            return OracleAnswer::of_bool(dist[static_cast<std::size_t>(f[1])] >= 0);
        }
        case TaskKind::edge_existence: {
            const std::string& a = g.nodes[static_cast<std::size_t>(f[0])].id;
            const std::string& b = g.nodes[static_cast<std::size_t>(f[1])].id;
            for (const Edge& e : g.edges) {
                const bool forward = e.src == a && e.dst == b;
                const bool backward = e.src == b && e.dst == a;
                if (forward || (!g.directed && backward)) {
                    return OracleAnswer::of_bool(true);
                }
            }
            return OracleAnswer::of_bool(false);
        }
        case TaskKind::shortest_path: {
            const auto dist = detail::bfs_distances(g, f[0]);
            const int d = dist[static_cast<std::size_t>(f[1])];
            if (d < 0) {
                return OracleAnswer::no_path();
            }
            return OracleAnswer::of_int(d);
        }
    }
    throw std::logic_error("unreachable task kind");
}

}  // namespace nag
