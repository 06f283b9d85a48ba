#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "nag/graph.hpp"
#include "nag/rng.hpp"

using namespace nag;

namespace {

TextGraph two_node_graph() {
    TextGraph g;
    g.nodes = {{"a", "Alpha"}, {"b", "Beta"}};
    g.edges = {{"a", "b", "linked to"}};
    return g;
}

TextGraph random_graph(std::uint64_t seed, int n) {
    Rng rng(seed);
    TextGraph g;
    for (int i = 0; i < n; ++i) {
        g.nodes.push_back({"n" + std::to_string(i), "node " + std::to_string(i)});
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.bernoulli(0.3)) {
                g.edges.push_back({"n" + std::to_string(i), "n" + std::to_string(j), "edge text"});
            }
        }
    }
    return g;
}

// Element identity independent of ordering, for multiset comparisons.
std::vector<std::pair<int, int>> sorted_identities(const std::vector<UnifiedElement>& elements) {
    std::vector<std::pair<int, int>> ids;
    for (const UnifiedElement& e : elements) {
        ids.push_back({static_cast<int>(e.kind), e.source_index});
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

TEST_CASE("validate_graph accepts a well-formed graph") {
    const ValidationReport report = validate_graph(two_node_graph());
    CHECK(report.empty());
    CHECK(report.ok());
}

TEST_CASE("validate_graph flags dangling endpoints") {
    TextGraph g = two_node_graph();
    g.edges.push_back({"a", "Z", "points nowhere"});
    const ValidationReport report = validate_graph(g);
    CHECK_FALSE(report.ok());
    CHECK(report.count(IssueKind::dangling_endpoint) == 1);
}

TEST_CASE("validate_graph flags empty node text") {
    TextGraph g = two_node_graph();
    g.nodes.push_back({"c", "   "});
    const ValidationReport report = validate_graph(g);
    CHECK_FALSE(report.ok());
    CHECK(report.count(IssueKind::empty_node_text) == 1);
}

TEST_CASE("validate_graph flags duplicate ids and self-loop warnings") {
    TextGraph g = two_node_graph();
    g.nodes.push_back({"a", "Alpha again"});
    CHECK(validate_graph(g).count(IssueKind::duplicate_node_id) == 1);

    TextGraph loop = two_node_graph();
    loop.edges.push_back({"a", "a", "loops"});
    const ValidationReport report = validate_graph(loop);
    CHECK(report.ok());  // warnings only
    CHECK_FALSE(report.empty());
    CHECK(report.count(IssueKind::self_loop) == 1);
}

TEST_CASE("unified_elements as-given lists nodes before edges") {
    TextGraph g;
    g.nodes = {{"x", "X"}, {"y", "Y"}, {"z", "Z"}};
    g.edges = {{"x", "y", "e"}, {"y", "z", "e"}};
    const auto elements = unified_elements(g, ElementOrder::as_given());
    REQUIRE(elements.size() == 5);
    for (int i = 0; i < 3; ++i) {
        CHECK(elements[static_cast<std::size_t>(i)].kind == ElementKind::node);
        CHECK(elements[static_cast<std::size_t>(i)].source_index == i);
    }
    for (int i = 3; i < 5; ++i) {
        CHECK(elements[static_cast<std::size_t>(i)].kind == ElementKind::edge);
        CHECK(elements[static_cast<std::size_t>(i)].source_index == i - 3);
    }
    for (std::size_t i = 0; i < elements.size(); ++i) {
        CHECK(elements[i].ordinal == static_cast<int>(i));
    }
}

TEST_CASE("unified_elements random order is seed-deterministic") {
    const TextGraph g = random_graph(11, 6);
    const auto a = unified_elements(g, ElementOrder::random(7));
    const auto b = unified_elements(g, ElementOrder::random(7));
    CHECK(a == b);
    const auto c = unified_elements(g, ElementOrder::random(8));
    CHECK(sorted_identities(a) == sorted_identities(c));
}

TEST_CASE("unified_elements is a bijection for every order") {
    const TextGraph g = random_graph(23, 8);
    const std::size_t expected = g.nodes.size() + g.edges.size();
    for (const ElementOrder order :
         {ElementOrder::as_given(), ElementOrder::random(3), ElementOrder::bfs()}) {
        const auto elements = unified_elements(g, order);
        REQUIRE(elements.size() == expected);
        auto ids = sorted_identities(elements);
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        CHECK(ids.size() == expected);
    }
}

TEST_CASE("unified_elements bfs covers disconnected graphs and rejects empty ones") {
    TextGraph g;
    g.nodes = {{"a", "A"}, {"b", "B"}, {"c", "C"}};
    g.edges = {{"a", "b", "e"}};
    const auto elements = unified_elements(g, ElementOrder::bfs());
    CHECK(elements.size() == 4);  // isolated node c still present
    CHECK(elements.front().kind == ElementKind::node);

    const TextGraph empty;
    CHECK_THROWS_AS(unified_elements(empty, ElementOrder::bfs()), std::invalid_argument);
}

TEST_CASE("graph json parses the minimal document") {
    const std::string doc = R"({"directed": false,
        "nodes": [{"id": "a", "text": "Alpha"}, {"id": "b", "text": "Beta"}],
        "edges": [{"src": "a", "dst": "b", "text": "linked to"}]})";
    const TextGraph g = parse_graph_json(doc);
    CHECK(g.nodes.size() == 2);
    CHECK(g.edges.size() == 1);
    CHECK_FALSE(g.directed);
}

TEST_CASE("graph json round-trips random graphs") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TextGraph g = random_graph(seed, 10);
        CHECK(parse_graph_json(serialize_graph_json(g)) == g);
    }
}

TEST_CASE("graph json reports malformed input with a byte offset") {
    try {
        parse_graph_json("{\"directed\": false, ");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("graph json reports schema violations with a path") {
    try {
        parse_graph_json(R"({"directed": false, "nodes": [{"id": "a"}], "edges": []})");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("$.nodes[0].text") != std::string::npos);
    }
}

TEST_CASE("graph json rejects duplicate node ids") {
    const std::string doc = R"({"directed": false,
        "nodes": [{"id": "a", "text": "A"}, {"id": "a", "text": "A2"}],
        "edges": []})";
    CHECK_THROWS_AS(parse_graph_json(doc), ParseError);
}
