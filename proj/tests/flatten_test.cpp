#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>

#include "nag/flatten.hpp"
#include "nag/graph.hpp"
#include "nag/rng.hpp"
#include "nag/vocab.hpp"

using namespace nag;

namespace {

Vocabulary test_vocab() {
    return Vocabulary::build({"The Matrix", "Sci-Fi", "Keanu Reeves", "belongs to", "starred by",
                              "A", "q", "Who starred in The Matrix?"});
}

TextGraph matrix_graph() {
    TextGraph g;
    g.nodes = {{"m", "The Matrix"}, {"s", "Sci-Fi"}, {"k", "Keanu Reeves"}};
    g.edges = {{"m", "s", "belongs to"}, {"m", "k", "starred by"}};
    return g;
}

}  // namespace

TEST_CASE("tokenize splits words and is deterministic") {
    const Vocabulary v = test_vocab();
    const auto ids = v.tokenize("The Matrix");
    CHECK(ids.size() == 2);
    CHECK(ids == v.tokenize("The Matrix"));
    for (const int id : ids) {
        CHECK(id >= tok::first_word);
    }
}

TEST_CASE("tokenize never produces reserved ids") {
    const Vocabulary v = test_vocab();
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int len = rng.range(1, 30);
        for (int i = 0; i < len; ++i) {
            text += static_cast<char>(rng.range(32, 126));
        }
        for (const int id : v.tokenize(text)) {
            CHECK(id >= tok::byte_base);
        }
    }
    // the special token spellings themselves tokenize to punctuation + text
    for (const char* s : {"<g>", "</g>", "<n>", "</n>", "<e>", "</e>"}) {
        for (const int id : v.tokenize(s)) {
            CHECK(id >= tok::byte_base);
        }
    }
}

TEST_CASE("unknown words fall back to bytes and detokenize intact") {
    const Vocabulary v = test_vocab();
    const auto ids = v.tokenize("Zyzzyva");
    REQUIRE(ids.size() == 7);
    for (const int id : ids) {
        CHECK(id >= tok::byte_base);
        CHECK(id < tok::first_word);
    }
    CHECK(v.detokenize(ids) == "Zyzzyva");
}

TEST_CASE("flatten lays out the movie example") {
    const Vocabulary v = test_vocab();
    const TextGraph g = matrix_graph();
    const auto elements = unified_elements(g, ElementOrder::as_given());
    const FlattenedSequence seq = flatten(v, g, elements, "Who starred in The Matrix?");

    REQUIRE(seq.element_spans.size() == 5);
    CHECK(seq.token_ids[0] == tok::graph_open);
    CHECK(seq.graph_start == 0);
    // every element span falls strictly between the graph tags
    for (const TokenSpan& span : seq.element_spans) {
        CHECK(span.begin > seq.graph_start);
        CHECK(span.end < seq.graph_hub);
    }
    CHECK(seq.token_ids[static_cast<std::size_t>(seq.graph_hub)] == tok::graph_close);
    CHECK(seq.query_span.begin == seq.graph_hub + 1);
    CHECK(seq.query_span.end == seq.size() - 1);
    // hubs carry the kind-matching closing tag
    for (std::size_t e = 0; e < elements.size(); ++e) {
        const int hub = seq.hub_index[e];
        CHECK(hub == seq.element_spans[e].end);
        const int expected =
            elements[e].kind == ElementKind::node ? tok::node_close : tok::edge_close;
        CHECK(seq.token_ids[static_cast<std::size_t>(hub)] == expected);
    }
}

TEST_CASE("flatten hand-counted single node layout") {
    const Vocabulary v = test_vocab();
    TextGraph g;
    g.nodes = {{"a", "A"}};
    const auto elements = unified_elements(g, ElementOrder::as_given());
    const FlattenedSequence seq = flatten(v, g, elements, "q");
    // <g> <n> A </n> </g> q
    REQUIRE(seq.size() == 6);
    CHECK(seq.hub_index[0] == 3);
    CHECK(seq.graph_hub == 4);
    CHECK(seq.query_span.begin == 5);
    CHECK(seq.query_span.end == 5);
}

TEST_CASE("element order changes spans but not contents") {
    const Vocabulary v = test_vocab();
    const TextGraph g = matrix_graph();
    const FlattenedSequence a =
        flatten(v, g, unified_elements(g, ElementOrder::as_given()), "q");
    const FlattenedSequence b =
        flatten(v, g, unified_elements(g, ElementOrder::random(4)), "q");
    CHECK(a.size() == b.size());

    auto span_contents = [](const FlattenedSequence& seq) {
        std::vector<std::vector<int>> spans;
        for (const TokenSpan& span : seq.element_spans) {
            spans.push_back({seq.token_ids.begin() + span.begin,
                             seq.token_ids.begin() + span.end + 1});
        }
        std::sort(spans.begin(), spans.end());
        return spans;
    };
    CHECK(span_contents(a) == span_contents(b));
}

TEST_CASE("flatten is reconstructible and spans partition the graph segment") {
    const Vocabulary v = test_vocab();
    const TextGraph g = matrix_graph();
    const auto elements = unified_elements(g, ElementOrder::random(12));
    const FlattenedSequence seq = flatten(v, g, elements, "q");

    // recover each element's text from its span
    for (std::size_t e = 0; e < elements.size(); ++e) {
        const TokenSpan span = seq.element_spans[e];
        std::vector<int> content(seq.token_ids.begin() + span.begin + 1,
                                 seq.token_ids.begin() + span.end);
        const std::string recovered = v.detokenize(content);
        const UnifiedElement& el = elements[e];
        const std::string& expected =
            el.kind == ElementKind::node
                ? g.nodes[static_cast<std::size_t>(el.source_index)].text
                : g.edges[static_cast<std::size_t>(el.source_index)].text;
        CHECK(recovered == expected);
    }

    // every index in [graph_start, graph_hub] is a tag or inside exactly one span
    std::map<int, int> owners;
    for (int i = seq.graph_start; i <= seq.graph_hub; ++i) {
        owners[i] = 0;
    }
    owners[seq.graph_start]++;
    owners[seq.graph_hub]++;
    for (const TokenSpan& span : seq.element_spans) {
        for (int i = span.begin; i <= span.end; ++i) {
            owners[i]++;
        }
    }
    for (const auto& [index, count] : owners) {
        INFO("index " << index);
        CHECK(count == 1);
    }
}

TEST_CASE("flatten records the answer span for training sequences") {
    const Vocabulary v = test_vocab();
    TextGraph g;
    g.nodes = {{"a", "A"}};
    const auto elements = unified_elements(g, ElementOrder::as_given());
    const FlattenedSequence seq = flatten(v, g, elements, "q", "A");
    CHECK(seq.answer_start == 6);
    CHECK(seq.token_ids.back() == tok::end_of_answer);
    CHECK(seq.in_query(seq.answer_start));
    CHECK(seq.query_span.end == seq.size() - 1);
}

TEST_CASE("flatten rejects an empty graph") {
    const Vocabulary v = test_vocab();
    const TextGraph g;
    CHECK_THROWS_AS(flatten(v, g, {}, "q"), std::invalid_argument);
}
