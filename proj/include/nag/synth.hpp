#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nag/graph.hpp"
#include "nag/rng.hpp"
#include "nag/tasks.hpp"
#include "nag/text_encoding.hpp"

namespace nag {

enum class TopologyKind {
    erdos_renyi,
    barabasi_albert,
    stochastic_block,
    watts_strogatz,
    complete,
    star,
    path,
};

inline constexpr std::array<TopologyKind, 7> kAllTopologies = {
    TopologyKind::erdos_renyi,   TopologyKind::barabasi_albert, TopologyKind::stochastic_block,
    TopologyKind::watts_strogatz, TopologyKind::complete,        TopologyKind::star,
    TopologyKind::path,
};

inline const char* topology_name(TopologyKind k) {
    switch (k) {
        case TopologyKind::erdos_renyi: return "erdos-renyi";
        case TopologyKind::barabasi_albert: return "barabasi-albert";
        case TopologyKind::stochastic_block: return "stochastic-block";
        case TopologyKind::watts_strogatz: return "watts-strogatz";
        case TopologyKind::complete: return "complete";
        case TopologyKind::star: return "star";
        case TopologyKind::path: return "path";
    }
    throw std::logic_error("unreachable topology");
}

inline std::optional<TopologyKind> topology_from_name(std::string_view name) {
    for (const TopologyKind k : kAllTopologies) {
        if (name == topology_name(k)) {
            return k;
        }
    }
    return std::nullopt;
}

struct TopologyParams {
    int n = 10;               // node count, 5..20
    double er_p = 0.25;       // erdos-renyi edge probability
    int ba_m = 2;             // barabasi-albert attachment count
    double sbm_p_intra = 0.6; // stochastic-block: 2 blocks, even split
    double sbm_p_inter = 0.1;
    int ws_k = 4;             // watts-strogatz ring degree (even)
    double ws_beta = 0.2;     // watts-strogatz rewire probability
};

inline constexpr int kMinNodes = 5;
inline constexpr int kMaxNodes = 20;
inline constexpr int kMaxEdges = 200;

namespace detail {

inline TextGraph skeleton(int n) {
    TextGraph g;
    g.directed = false;
    g.nodes.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::string id = std::to_string(i);
        g.nodes.push_back({id, id});
    }
    return g;
}

inline void add_edge(TextGraph& g, int u, int v) {
    g.edges.push_back({std::to_string(u), std::to_string(v), "linked to"});
}

}  // namespace detail

// Generates an undirected graph of the requested topology. Deterministic
// given the seed; every edge is stored once.
inline TextGraph generate_graph(TopologyKind kind, const TopologyParams& params,
                                std::uint64_t seed) {
    const int n = params.n;
    if (n < kMinNodes || n > kMaxNodes) {
        throw std::invalid_argument("node count must be in [5, 20], got " + std::to_string(n));
    }
    Rng rng(seed);
    TextGraph g = detail::skeleton(n);

    switch (kind) {
        case TopologyKind::erdos_renyi: {
            if (params.er_p < 0.0 || params.er_p > 1.0) {
                throw std::invalid_argument("erdos-renyi edge probability out of [0, 1]");
            }
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    if (rng.bernoulli(params.er_p)) {
                        detail::add_edge(g, i, j);
                    }
                }
            }
            break;
        }
        case TopologyKind::barabasi_albert: {
            const int m = params.ba_m;
            if (m < 1 || m >= n) {
                throw std::invalid_argument("barabasi-albert needs 1 <= m < n");
            }
            // Preferential attachment over the multiset of edge endpoints.
            std::vector<int> targets;
            for (int i = 0; i < m; ++i) {
                targets.push_back(i);
            }
            std::vector<int> repeated;
            for (int v = m; v < n; ++v) {
                for (const int t : targets) {
                    detail::add_edge(g, v, t);
                }
                for (const int t : targets) {
                    repeated.push_back(t);
                    repeated.push_back(v);
                }
                // Draw m distinct targets for the next node.
                std::vector<int> next;
                while (static_cast<int>(next.size()) < m) {
                    const int cand = repeated[static_cast<std::size_t>(rng.below(repeated.size()))];
                    if (std::find(next.begin(), next.end(), cand) == next.end()) {
                        next.push_back(cand);
                    }
                }
                targets = std::move(next);
            }
            break;
        }
        case TopologyKind::stochastic_block: {
            if (params.sbm_p_intra < 0.0 || params.sbm_p_intra > 1.0 ||
                params.sbm_p_inter < 0.0 || params.sbm_p_inter > 1.0) {
                throw std::invalid_argument("stochastic-block probabilities out of [0, 1]");
            }
            for (;;) {
                g.edges.clear();
                const int split = n / 2;  // block 0 = [0, split), block 1 = [split, n)
                for (int i = 0; i < n; ++i) {
                    for (int j = i + 1; j < n; ++j) {
                        const bool same = (i < split) == (j < split);
                        if (rng.bernoulli(same ? params.sbm_p_intra : params.sbm_p_inter)) {
                            detail::add_edge(g, i, j);
                        }
                    }
                }
                if (static_cast<int>(g.edges.size()) <= kMaxEdges) {
                    break;
                }
            }
            break;
        }
        case TopologyKind::watts_strogatz: {
            const int k = params.ws_k;
            if (k < 2 || k % 2 != 0 || k >= n) {
                throw std::invalid_argument("watts-strogatz needs even 2 <= k < n");
            }
            if (params.ws_beta < 0.0 || params.ws_beta > 1.0) {
                throw std::invalid_argument("watts-strogatz rewire probability out of [0, 1]");
            }
            // Ring lattice, then rewire the far endpoint with probability beta.
            std::vector<std::pair<int, int>> ring;
            for (int j = 1; j <= k / 2; ++j) {
                for (int i = 0; i < n; ++i) {
                    ring.push_back({i, (i + j) % n});
                }
            }
            auto has_edge = [&g](int a, int b) {
                return std::any_of(g.edges.begin(), g.edges.end(), [&](const Edge& e) {
                    const std::string as = std::to_string(a);
                    const std::string bs = std::to_string(b);
                    return (e.src == as && e.dst == bs) || (e.src == bs && e.dst == as);
                });
            };
            for (const auto& [u, v] : ring) {
                int w = v;
                if (rng.bernoulli(params.ws_beta)) {
                    int tries = 0;
                    do {
                        w = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                    } while ((w == u || has_edge(u, w)) && ++tries < 4 * n);
                    if (w == u || has_edge(u, w)) {
                        w = v;  // saturated neighborhood; keep the lattice edge
                    }
                }
                if (!has_edge(u, w)) {
                    detail::add_edge(g, u, w);
                }
            }
            break;
        }
        case TopologyKind::complete: {
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    detail::add_edge(g, i, j);
                }
            }
            break;
        }
        case TopologyKind::star: {
            for (int i = 1; i < n; ++i) {
                detail::add_edge(g, 0, i);
            }
            break;
        }
        case TopologyKind::path: {
            for (int i = 0; i + 1 < n; ++i) {
                detail::add_edge(g, i, i + 1);
            }
            break;
        }
    }

    if (static_cast<int>(g.edges.size()) > kMaxEdges) {
        throw std::logic_error("generator exceeded the edge budget");
    }
    return g;
}

// One benchmark item: an encoded graph, a rendered question, the oracle
// answer in canonical form, and the focus node ids the question mentions.
struct TaskSample {
    std::string id;
    TaskKind task = TaskKind::node_count;
    TextGraph graph;
    std::string question;
    std::string answer;
    std::vector<std::string> focus;
};

namespace detail {

inline std::string render_question(TaskKind task, TextEncodingScheme scheme, int variant,
                                   const std::vector<std::string>& names) {
    const SchemeVocab& v = scheme_vocab(scheme);
    const std::string ent(v.entity_plural);
    const std::string rel(v.relation_singular);
    const std::string rels(v.relation_plural);
    auto a = [&names] { return names.at(0); };
    auto b = [&names] { return names.at(1); };
    switch (task) {
        case TaskKind::node_count:
            switch (variant) {
                case 0: return "How many " + ent + " are there?";
                case 1: return "Count the " + ent + ".";
                default: return "What is the total number of " + ent + "?";
            }
        case TaskKind::edge_count:
            switch (variant) {
                case 0: return "How many " + rels + " are there?";
                case 1: return "Count the " + rels + ".";
                default: return "What is the total number of " + rels + "?";
            }
        case TaskKind::cycle_check:
            switch (variant) {
                case 0: return "Is there a cycle?";
                case 1: return "Does the graph contain a cycle?";
                default: return "Can a cycle be found?";
            }
        case TaskKind::triangle_count:
            switch (variant) {
                case 0: return "How many triangles are there?";
                case 1: return "Count the triangles.";
                default: return "What is the total number of triangles?";
            }
        case TaskKind::node_degree:
            switch (variant) {
                case 0: return "What is the degree of " + a() + "?";
                case 1: return "How many " + rels + " does " + a() + " have?";
                default: return "Count the neighbors of " + a() + ".";
            }
        case TaskKind::connected_nodes:
            switch (variant) {
                case 0: return "Which " + ent + " are connected to " + a() + "?";
                case 1: return "List the neighbors of " + a() + ".";
                default: return "Name every " + std::string(v.entity_singular) + " linked to " +
                                a() + ".";
            }
        case TaskKind::reachability:
            switch (variant) {
                case 0: return "Is there a path between " + a() + " and " + b() + "?";
                case 1: return "Can " + a() + " reach " + b() + "?";
                default: return "Is " + b() + " reachable from " + a() + "?";
            }
        case TaskKind::edge_existence:
            switch (variant) {
                case 0: return "Is there a " + rel + " between " + a() + " and " + b() + "?";
                case 1: return "Are " + a() + " and " + b() + " directly connected?";
                default: return "Does an edge exist between " + a() + " and " + b() + "?";
            }
        case TaskKind::shortest_path:
            switch (variant) {
                case 0: return "How long is the shortest path from " + a() + " to " + b() + "?";
                case 1:
                    return "What is the length of the shortest path between " + a() + " and " +
                           b() + "?";
                default: return "How many hops separate " + a() + " and " + b() + "?";
            }
    }
    throw std::logic_error("unreachable task kind");
}

// Picks focus node indices for the task. Returns nullopt when the graph
// cannot host the question (e.g. no connected pair for shortest-path).
inline std::optional<std::vector<int>> pick_focus(const TextGraph& g, TaskKind task, Rng& rng,
                                                  bool allow_disconnected_sp) {
    const int n = static_cast<int>(g.nodes.size());
    if (n == 0) {
        if (task_focus_arity(task) == 0) {
            return std::vector<int>{};
        }
        return std::nullopt;
    }
    switch (task_focus_arity(task)) {
        case 0:
            return std::vector<int>{};
        case 1:
            return std::vector<int>{static_cast<int>(rng.below(static_cast<std::uint64_t>(n)))};
        default:
            break;
    }
    if (n < 2) {
        return std::nullopt;
    }
    auto random_pair = [&rng, n] {
        const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
        if (v >= u) {
            ++v;
        }
        return std::vector<int>{u, v};
    };
    if (task == TaskKind::edge_existence && !g.edges.empty() && rng.bernoulli(0.5)) {
        // Half the time anchor on an actual edge so answers stay balanced.
        const Edge& e = g.edges[static_cast<std::size_t>(rng.below(g.edges.size()))];
        const int u = g.node_index(e.src);
        const int v = g.node_index(e.dst);
        if (u != v) {
            return std::vector<int>{u, v};
        }
    }
    if (task == TaskKind::shortest_path && !allow_disconnected_sp) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            const auto pair = random_pair();
            if (detail::bfs_distances(g, pair[0])[static_cast<std::size_t>(pair[1])] > 0) {
                return pair;
            }
        }
        return std::nullopt;
    }
    return random_pair();
}

}  // namespace detail

struct SampleOptions {
    bool allow_disconnected_shortest_path = false;
};

// Renders a question/answer pair over an already-encoded graph. Throws when
// the graph cannot host the task (caller resamples with a new graph).
inline TaskSample make_sample(const TextGraph& g, TaskKind task, TextEncodingScheme scheme,
                              std::uint64_t seed, const SampleOptions& opts = {}) {
    if (g.nodes.empty() && task_focus_arity(task) > 0) {
        throw std::invalid_argument("task requires a focus node but the graph is empty");
    }
    Rng rng(seed);
    const auto focus_idx = detail::pick_focus(g, task, rng, opts.allow_disconnected_shortest_path);
    if (!focus_idx) {
        throw std::invalid_argument(std::string("no valid focus for task ") + task_name(task));
    }
    TaskSample sample;
    sample.task = task;
    sample.graph = g;
    std::vector<std::string> names;
    for (const int idx : *focus_idx) {
        sample.focus.push_back(g.nodes[static_cast<std::size_t>(idx)].id);
        names.push_back(g.nodes[static_cast<std::size_t>(idx)].text);
    }
    const int variant = static_cast<int>(rng.below(3));
    sample.question = detail::render_question(task, scheme, variant, names);
    sample.answer = solve_task(g, task, sample.focus).render();
    return sample;
}

inline nlohmann::json sample_to_json(const TaskSample& s) {
    return {{"id", s.id},
            {"task", task_name(s.task)},
            {"graph", graph_to_json(s.graph)},
            {"question", s.question},
            {"answer", s.answer},
            {"focus", s.focus}};
}

inline TaskSample sample_from_json(const nlohmann::json& j) {
    TaskSample s;
    s.id = detail::require_string(j, "id", "$");
    const std::string task = detail::require_string(j, "task", "$");
    const auto kind = task_from_name(task);
    if (!kind) {
        throw ParseError("unknown task \"" + task + "\" at $.task");
    }
    s.task = *kind;
    s.graph = graph_from_json(detail::require_field(j, "graph", "$"), "$.graph");
    s.question = detail::require_string(j, "question", "$");
    s.answer = detail::require_string(j, "answer", "$");
    if (auto it = j.find("focus"); it != j.end() && it->is_array()) {
        for (const auto& f : *it) {
            s.focus.push_back(f.get<std::string>());
        }
    }
    return s;
}

struct DatasetConfig {
    std::vector<TaskKind> tasks{kAllTasks.begin(), kAllTasks.end()};
    int per_task = 100;
    std::vector<TopologyKind> topologies{kAllTopologies.begin(), kAllTopologies.end()};
    std::vector<TextEncodingScheme> encodings{kAllEncodings.begin(), kAllEncodings.end()};
    int min_nodes = kMinNodes;
    int max_nodes = kMaxNodes;
    bool allow_disconnected_shortest_path = false;
};

struct DatasetSplits {
    std::vector<TaskSample> train;
    std::vector<TaskSample> val;
    std::vector<TaskSample> test;
};

// 8:1:1 quotas by largest remainder, ties resolved train > val > test.
inline std::array<int, 3> split_sizes(int n) {
    const std::array<double, 3> weights = {0.8, 0.1, 0.1};
    std::array<int, 3> sizes{};
    std::array<double, 3> fracs{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double quota = weights[static_cast<std::size_t>(i)] * n;
        sizes[static_cast<std::size_t>(i)] = static_cast<int>(quota);
        fracs[static_cast<std::size_t>(i)] = quota - sizes[static_cast<std::size_t>(i)];
        assigned += sizes[static_cast<std::size_t>(i)];
    }
    for (int left = n - assigned; left > 0; --left) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (fracs[static_cast<std::size_t>(i)] > fracs[static_cast<std::size_t>(best)]) {
                best = i;
            }
        }
        ++sizes[static_cast<std::size_t>(best)];
        fracs[static_cast<std::size_t>(best)] = -1.0;
    }
    return sizes;
}

namespace detail {

inline TopologyParams draw_params(TopologyKind kind, int n, Rng& rng) {
    TopologyParams p;
    p.n = n;
    switch (kind) {
        case TopologyKind::erdos_renyi:
            p.er_p = rng.uniform_in(0.15, 0.45);
            break;
        case TopologyKind::barabasi_albert:
            p.ba_m = rng.range(1, 3);
            break;
        case TopologyKind::watts_strogatz:
            p.ws_k = 2 * rng.range(1, std::max(1, (n - 1) / 2));
            p.ws_beta = rng.uniform_in(0.1, 0.3);
            break;
        default:
            break;
    }
    return p;
}

}  // namespace detail

// Generates the full benchmark deterministically. Every sample derives its
// own sub-seed from (seed, task index, sample index), and topology/encoding
// pairs cycle in fixed order for an equal-proportion mixture.
inline DatasetSplits generate_dataset(const DatasetConfig& config, std::uint64_t seed) {
    DatasetSplits out;
    SampleOptions sopts{config.allow_disconnected_shortest_path};

    std::vector<std::pair<TopologyKind, TextEncodingScheme>> combos;
    for (const TopologyKind t : config.topologies) {
        for (const TextEncodingScheme e : config.encodings) {
            combos.push_back({t, e});
        }
    }
    if (combos.empty()) {
        throw std::invalid_argument("dataset config needs at least one topology and encoding");
    }

    for (std::size_t t = 0; t < config.tasks.size(); ++t) {
        const TaskKind task = config.tasks[t];
        const auto sizes = split_sizes(config.per_task);
        for (int i = 0; i < config.per_task; ++i) {
            const auto [topology, encoding] =
                combos[static_cast<std::size_t>(i) % combos.size()];
            TaskSample sample;
            bool made = false;
            for (int attempt = 0; attempt < 100 && !made; ++attempt) {
                Rng rng(derive_seed(seed, t * 1000003ULL + static_cast<std::uint64_t>(i),
                                    static_cast<std::uint64_t>(attempt)));
                const int n = rng.range(config.min_nodes, config.max_nodes);
                const TopologyParams params = detail::draw_params(topology, n, rng);
                const TextGraph raw = generate_graph(topology, params, rng.u64());
                const TextGraph encoded = apply_text_encoding(raw, encoding, rng.u64());
                try {
                    sample = make_sample(encoded, task, encoding, rng.u64(), sopts);
                    made = true;
                } catch (const std::invalid_argument&) {
                    // e.g. no connected pair for shortest-path; retry with a new graph
                }
            }
            if (!made) {
                throw std::runtime_error(std::string("could not generate a valid sample for ") +
                                         task_name(task));
            }
            sample.id = std::string(task_name(task)) + "-" + std::to_string(i);
            auto& split = i < sizes[0] ? out.train : (i < sizes[0] + sizes[1] ? out.val : out.test);
            split.push_back(std::move(sample));
        }
    }
    return out;
}

inline std::string dataset_to_jsonl(const std::vector<TaskSample>& samples) {
    std::string out;
    for (const TaskSample& s : samples) {
        out += sample_to_json(s).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<TaskSample> dataset_from_jsonl(std::string_view text) {
    std::vector<TaskSample> out;
    std::size_t pos = 0;
    int lineno = 1;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const std::string_view line = text.substr(pos, end - pos);
        if (!line.empty()) {
            try {
                out.push_back(sample_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception& e) {
                throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        pos = end + 1;
        ++lineno;
    }
    return out;
}

}  // namespace nag
