#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "nag/flatten.hpp"
#include "nag/mask.hpp"
#include "nag/positions.hpp"
#include "nag/synth.hpp"
#include "nag/vocab.hpp"

using namespace nag;

namespace {

Vocabulary test_vocab() {
    return Vocabulary::build({"A B C D knows likes verylongedgetext x y z q hello world"});
}

}  // namespace

TEST_CASE("recalibrated ids synchronize equal-length elements") {
    // three 3-token elements: two nodes and one edge, all single-word content
    TextGraph g;
    g.nodes = {{"a", "A"}, {"b", "B"}};
    g.edges = {{"a", "b", "knows"}};
    const Vocabulary v = test_vocab();
    const FlattenedSequence seq = flatten(v, g, unified_elements(g, ElementOrder::as_given()), "q");
    const PositionAssignment pa = assign_recalibrated(seq);
    CHECK(pa.p_start == 0);
    CHECK(pa.p_hub == 3);
    for (const TokenSpan& span : seq.element_spans) {
        CHECK(pa.ids[static_cast<std::size_t>(span.begin)] == 1);
        CHECK(pa.ids[static_cast<std::size_t>(span.begin + 1)] == 2);
        CHECK(pa.ids[static_cast<std::size_t>(span.end)] == 3);
    }
    CHECK(pa.ids[static_cast<std::size_t>(seq.graph_hub)] == 4);
    CHECK(pa.ids[static_cast<std::size_t>(seq.query_span.begin)] == 5);
}

TEST_CASE("recalibrated ids left-align short elements") {
    // element lengths 3 (node "A") and 5 (edge with a 3-token phrase)
    TextGraph g;
    g.nodes = {{"a", "A"}, {"b", "B"}};
    g.edges = {{"a", "b", "knows likes knows"}};
    const Vocabulary v = test_vocab();
    const FlattenedSequence seq = flatten(v, g, unified_elements(g, ElementOrder::as_given()), "q");
    const PositionAssignment pa = assign_recalibrated(seq);
    CHECK(pa.p_hub == 5);
    const TokenSpan node_span = seq.element_spans[0];
    REQUIRE(node_span.length() == 3);
    CHECK(pa.ids[static_cast<std::size_t>(node_span.begin)] == 1);
    CHECK(pa.ids[static_cast<std::size_t>(node_span.begin + 1)] == 2);
    CHECK(pa.ids[static_cast<std::size_t>(node_span.end)] == 5);
    const TokenSpan edge_span = seq.element_spans[2];
    REQUIRE(edge_span.length() == 5);
    for (int k = 0; k < 4; ++k) {
        CHECK(pa.ids[static_cast<std::size_t>(edge_span.begin + k)] == 1 + k);
    }
    CHECK(pa.ids[static_cast<std::size_t>(edge_span.end)] == 5);
}

TEST_CASE("single element recalibration degenerates to sequential") {
    TextGraph g;
    g.nodes = {{"a", "A"}};
    const Vocabulary v = test_vocab();
    const FlattenedSequence seq = flatten(v, g, unified_elements(g, ElementOrder::as_given()), "q");
    const PositionAssignment recal = assign_recalibrated(seq);
    const PositionAssignment sequential = assign_sequential(seq);
    CHECK(recal.ids == sequential.ids);
}

TEST_CASE("sequential ids are the identity") {
    TextGraph g;
    g.nodes = {{"a", "A"}, {"b", "B"}};
    g.edges = {{"a", "b", "knows likes"}};
    const Vocabulary v = test_vocab();
    const FlattenedSequence seq =
        flatten(v, g, unified_elements(g, ElementOrder::as_given()), "q");
    REQUIRE(seq.size() == 13);
    const PositionAssignment pa = assign_sequential(seq);
    for (int i = 0; i < seq.size(); ++i) {
        CHECK(pa.ids[static_cast<std::size_t>(i)] == i);
    }
    // differs from recalibrated on any multi-element graph
    CHECK(assign_recalibrated(seq).ids != pa.ids);
}

TEST_CASE("hub equidistance under recalibrated indexing") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        TopologyParams p;
        p.n = rng.range(5, 10);
        const TextGraph g = apply_text_encoding(
            generate_graph(TopologyKind::erdos_renyi, p, rng.u64()),
            TextEncodingScheme::friendship, rng.u64());
        const Vocabulary v = Vocabulary::build({serialize_graph_json(g), "hello world"});
        const FlattenedSequence seq =
            flatten(v, g, unified_elements(g, ElementOrder::random(trial)), "hello world");
        const PositionAssignment pa = assign_recalibrated(seq);
        for (int q = seq.query_span.begin; q <= seq.query_span.end; ++q) {
            for (const int hub : seq.hub_index) {
                CHECK(pa.ids[static_cast<std::size_t>(q)] -
                          pa.ids[static_cast<std::size_t>(hub)] ==
                      pa.ids[static_cast<std::size_t>(q)] - pa.p_hub);
            }
        }
    }
}

TEST_CASE("relative geometry is invariant to element permutation") {
    TextGraph g;
    g.nodes = {{"a", "A"}, {"b", "B"}, {"c", "C"}};
    g.edges = {{"a", "b", "knows"}, {"b", "c", "verylongedgetext likes knows"}};
    const Vocabulary v = test_vocab();

    auto query_offsets = [&](const FlattenedSequence& seq) {
        const TopoMask mask = compose_mask(seq, g, QueryMode::sparse);
        const PositionAssignment pa = assign_recalibrated(seq);
        std::vector<std::multiset<int>> rows;
        for (int i = seq.query_span.begin; i <= seq.query_span.end; ++i) {
            std::multiset<int> offsets;
            for (int j = 0; j < seq.size(); ++j) {
                if (mask.bits.get(i, j)) {
                    offsets.insert(pa.ids[static_cast<std::size_t>(i)] -
                                   pa.ids[static_cast<std::size_t>(j)]);
                }
            }
            rows.push_back(std::move(offsets));
        }
        return rows;
    };

    const FlattenedSequence base =
        flatten(v, g, unified_elements(g, ElementOrder::as_given()), "hello world");
    const auto expect = query_offsets(base);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const FlattenedSequence perm =
            flatten(v, g, unified_elements(g, ElementOrder::random(seed)), "hello world");
        CHECK(query_offsets(perm) == expect);
    }
}

TEST_CASE("ids increase strictly inside element spans under both schemes") {
    TextGraph g;
    g.nodes = {{"a", "A"}, {"b", "B"}};
    g.edges = {{"a", "b", "knows likes knows"}};
    const Vocabulary v = test_vocab();
    const FlattenedSequence seq = flatten(v, g, unified_elements(g, ElementOrder::as_given()), "q");
    for (const PositionAssignment& pa : {assign_recalibrated(seq), assign_sequential(seq)}) {
        for (const TokenSpan& span : seq.element_spans) {
            for (int i = span.begin; i < span.end; ++i) {
                CHECK(pa.ids[static_cast<std::size_t>(i)] <
                      pa.ids[static_cast<std::size_t>(i + 1)]);
            }
        }
    }
}
