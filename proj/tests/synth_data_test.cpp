#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "nag/synth.hpp"

using namespace nag;

namespace {

TopologyParams params_n(int n) {
    TopologyParams p;
    p.n = n;
    return p;
}

long long degree_of(const TextGraph& g, const std::string& id) {
    long long d = 0;
    for (const Edge& e : g.edges) {
        d += (e.src == id) + (e.dst == id);
    }
    return d;
}

}  // namespace

TEST_CASE("complete graph has C(n,2) edges") {
    const TextGraph g = generate_graph(TopologyKind::complete, params_n(5), 1);
    CHECK(g.nodes.size() == 5);
    CHECK(g.edges.size() == 10);
}

TEST_CASE("star graph has one hub of full degree") {
    const TextGraph g = generate_graph(TopologyKind::star, params_n(6), 1);
    CHECK(g.nodes.size() == 6);
    CHECK(g.edges.size() == 5);
    int full_degree = 0;
    for (const Node& n : g.nodes) {
        full_degree += degree_of(g, n.id) == 5 ? 1 : 0;
    }
    CHECK(full_degree == 1);
}

TEST_CASE("path graph is an acyclic chain") {
    const TextGraph g = generate_graph(TopologyKind::path, params_n(8), 1);
    CHECK(g.nodes.size() == 8);
    CHECK(g.edges.size() == 7);
    CHECK(solve_task(g, TaskKind::cycle_check).render() == "No");
}

TEST_CASE("generators are deterministic and validate parameters") {
    for (const TopologyKind kind : kAllTopologies) {
        const TextGraph a = generate_graph(kind, params_n(9), 42);
        const TextGraph b = generate_graph(kind, params_n(9), 42);
        CHECK(a == b);
        CHECK(validate_graph(a).ok());
    }
    CHECK_THROWS_AS(generate_graph(TopologyKind::complete, params_n(4), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_graph(TopologyKind::complete, params_n(21), 1),
                    std::invalid_argument);
    TopologyParams bad = params_n(8);
    bad.er_p = 1.5;
    CHECK_THROWS_AS(generate_graph(TopologyKind::erdos_renyi, bad, 1), std::invalid_argument);
    bad = params_n(8);
    bad.ws_k = 3;
    CHECK_THROWS_AS(generate_graph(TopologyKind::watts_strogatz, bad, 1), std::invalid_argument);
}

TEST_CASE("generated graphs stay within the node and edge bounds") {
    for (const TopologyKind kind : kAllTopologies) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            TopologyParams p = params_n(rng.range(5, 20));
            const TextGraph g = generate_graph(kind, p, seed * 31 + 7);
            CHECK(g.nodes.size() >= 5);
            CHECK(g.nodes.size() <= 20);
            CHECK(g.edges.size() <= 200);
        }
    }
}

TEST_CASE("adjacency encoding numbers nodes by index") {
    TextGraph g;
    g.nodes = {{"a", "foo"}, {"b", "bar"}, {"c", "baz"}};
    g.edges = {{"a", "b", "x"}};
    const TextGraph enc = apply_text_encoding(g, TextEncodingScheme::adjacency, 5);
    CHECK(enc.nodes[0].text == "0");
    CHECK(enc.nodes[1].text == "1");
    CHECK(enc.nodes[2].text == "2");
}

TEST_CASE("friendship encoding phrases edges with friend") {
    const TextGraph g = generate_graph(TopologyKind::complete, params_n(5), 3);
    const TextGraph enc = apply_text_encoding(g, TextEncodingScheme::friendship, 3);
    for (const Edge& e : enc.edges) {
        CHECK(e.text.find("friend") != std::string::npos);
    }
}

TEST_CASE("encoding seeds change names but not topology") {
    const TextGraph g = generate_graph(TopologyKind::star, params_n(7), 9);
    const TextGraph a = apply_text_encoding(g, TextEncodingScheme::got, 1);
    const TextGraph b = apply_text_encoding(g, TextEncodingScheme::got, 2);
    CHECK(a.edges.size() == b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].src == b.edges[i].src);
        CHECK(a.edges[i].dst == b.edges[i].dst);
    }
    std::vector<std::string> names_a;
    std::vector<std::string> names_b;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        names_a.push_back(a.nodes[i].text);
        names_b.push_back(b.nodes[i].text);
    }
    CHECK(names_a != names_b);
    // names unique within each assignment
    std::set<std::string> unique_a(names_a.begin(), names_a.end());
    CHECK(unique_a.size() == names_a.size());
}

TEST_CASE("encoding errors when the pool is exhausted") {
    const TextGraph g = generate_graph(TopologyKind::path, params_n(20), 1);
    TextGraph big = g;
    for (int i = 20; i < 30; ++i) {
        big.nodes.push_back({std::to_string(i), std::to_string(i)});
    }
    CHECK_THROWS_AS(apply_text_encoding(big, TextEncodingScheme::expert, 1),
                    std::invalid_argument);
}

TEST_CASE("oracles on the closed-form topologies") {
    const TextGraph complete5 = generate_graph(TopologyKind::complete, params_n(5), 1);
    CHECK(solve_task(complete5, TaskKind::triangle_count).number == 10);
    CHECK(solve_task(complete5, TaskKind::node_count).number == 5);
    CHECK(solve_task(complete5, TaskKind::edge_count).number == 10);
    CHECK(solve_task(complete5, TaskKind::cycle_check).truth);

    const TextGraph path8 = generate_graph(TopologyKind::path, params_n(8), 1);
    CHECK(solve_task(path8, TaskKind::shortest_path, {"0", "7"}).number == 7);
    CHECK(solve_task(path8, TaskKind::reachability, {"0", "7"}).truth);

    const TextGraph star6 = generate_graph(TopologyKind::star, params_n(6), 1);
    CHECK_FALSE(solve_task(star6, TaskKind::cycle_check).truth);
    CHECK(solve_task(star6, TaskKind::node_degree, {"0"}).number == 5);
    CHECK_FALSE(solve_task(star6, TaskKind::edge_existence, {"1", "2"}).truth);
}

TEST_CASE("oracle handles disconnected pairs and self-loops") {
    TextGraph g;
    g.nodes = {{"a", "A"}, {"b", "B"}, {"c", "C"}};
    g.edges = {{"a", "b", "e"}};
    CHECK(solve_task(g, TaskKind::shortest_path, {"a", "c"}).render() == "no path");
    CHECK_FALSE(solve_task(g, TaskKind::reachability, {"a", "c"}).truth);

    g.edges.push_back({"c", "c", "loop"});
    CHECK(solve_task(g, TaskKind::cycle_check).truth);
    CHECK(solve_task(g, TaskKind::node_degree, {"c"}).number == 2);
}

TEST_CASE("make_sample renders canonical answers") {
    TopologyParams p = params_n(12);
    const TextGraph g = generate_graph(TopologyKind::complete, p, 2);
    const TextGraph enc = apply_text_encoding(g, TextEncodingScheme::adjacency, 2);
    const TaskSample count = make_sample(enc, TaskKind::node_count, TextEncodingScheme::adjacency, 5);
    CHECK(count.answer == "12");

    const TextGraph star = apply_text_encoding(generate_graph(TopologyKind::star, params_n(6), 3),
                                               TextEncodingScheme::friendship, 3);
    // force the center as focus by retrying seeds until focus is node 0
    for (std::uint64_t seed = 0;; ++seed) {
        const TaskSample s =
            make_sample(star, TaskKind::connected_nodes, TextEncodingScheme::friendship, seed);
        REQUIRE(s.focus.size() == 1);
        if (s.focus[0] == "0") {
            std::vector<std::string> leaves;
            for (std::size_t i = 1; i < star.nodes.size(); ++i) {
                leaves.push_back(star.nodes[i].text);
            }
            std::sort(leaves.begin(), leaves.end());
            std::string expect;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                expect += (i ? ", " : "") + leaves[i];
            }
            CHECK(s.answer == expect);
            CHECK(s.question.find(star.nodes[0].text) != std::string::npos);
            break;
        }
    }
}

TEST_CASE("split sizes follow the 8:1:1 ratio") {
    CHECK(split_sizes(900) == std::array<int, 3>{720, 90, 90});
    CHECK(split_sizes(10) == std::array<int, 3>{8, 1, 1});
    CHECK(split_sizes(9) == std::array<int, 3>{7, 1, 1});
    for (int n : {1, 2, 3, 17, 100, 901}) {
        const auto s = split_sizes(n);
        CHECK(s[0] + s[1] + s[2] == n);
    }
}

TEST_CASE("generate_dataset is deterministic and self-verifying") {
    DatasetConfig cfg;
    cfg.tasks = {TaskKind::node_count, TaskKind::connected_nodes, TaskKind::shortest_path};
    cfg.per_task = 20;
    cfg.max_nodes = 12;
    const DatasetSplits a = generate_dataset(cfg, 77);
    const DatasetSplits b = generate_dataset(cfg, 77);
    CHECK(dataset_to_jsonl(a.train) == dataset_to_jsonl(b.train));
    CHECK(dataset_to_jsonl(a.val) == dataset_to_jsonl(b.val));
    CHECK(dataset_to_jsonl(a.test) == dataset_to_jsonl(b.test));
    CHECK(a.train.size() == 3 * 16);
    CHECK(a.val.size() == 3 * 2);
    CHECK(a.test.size() == 3 * 2);

    std::set<std::string> ids;
    for (const auto* split : {&a.train, &a.val, &a.test}) {
        for (const TaskSample& s : *split) {
            CHECK(ids.insert(s.id).second);  // splits disjoint by sample
            CHECK(s.answer == solve_task(s.graph, s.task, s.focus).render());
            CHECK(s.graph.nodes.size() >= 5);
            CHECK(s.graph.nodes.size() <= 20);
            CHECK(s.graph.edges.size() <= 200);
        }
    }
}

TEST_CASE("dataset jsonl round-trips") {
    DatasetConfig cfg;
    cfg.tasks = {TaskKind::edge_existence};
    cfg.per_task = 10;
    const DatasetSplits splits = generate_dataset(cfg, 5);
    const std::string jsonl = dataset_to_jsonl(splits.train);
    const std::vector<TaskSample> parsed = dataset_from_jsonl(jsonl);
    REQUIRE(parsed.size() == splits.train.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].id == splits.train[i].id);
        CHECK(parsed[i].graph == splits.train[i].graph);
        CHECK(parsed[i].question == splits.train[i].question);
        CHECK(parsed[i].answer == splits.train[i].answer);
    }
}

TEST_CASE("mean node count over many graphs stays in the documented band") {
    double total = 0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        TopologyParams p = params_n(rng.range(5, 20));
        const TopologyKind kind = kAllTopologies[seed % kAllTopologies.size()];
        total += static_cast<double>(generate_graph(kind, p, seed).nodes.size());
        ++count;
    }
    const double mean = total / count;
    CHECK(mean >= 5.0);
    CHECK(mean <= 20.0);
    // population target is ~12.1; the uniform draw should land loosely near it
    CHECK(mean >= 9.0);
    CHECK(mean <= 16.0);
}
