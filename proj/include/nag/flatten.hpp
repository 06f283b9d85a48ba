#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nag/graph.hpp"
#include "nag/vocab.hpp"

namespace nag {

// Inclusive token index range.
struct TokenSpan {
    int begin = 0;
    int end = 0;

    int length() const { return end - begin + 1; }
    bool contains(int i) const { return i >= begin && i <= end; }
    bool operator==(const TokenSpan&) const = default;
};

// A graph serialized to one token sequence:
//   <g> [open tag, content, close tag]* </g> query...
// Each element's closing tag is its hub. During training the query span also
// carries the gold answer tokens plus the end-of-answer token.
struct FlattenedSequence {
    std::vector<int> token_ids;
    std::vector<UnifiedElement> elements;  // serialization order
    std::vector<TokenSpan> element_spans;  // parallel to elements
    std::vector<int> hub_index;            // parallel to elements; = span.end
    int graph_start = 0;                   // index of <g>
    int graph_hub = 0;                     // index of </g>
    TokenSpan query_span{0, -1};           // question (+ answer when training)
    int answer_start = -1;                 // first answer token, -1 when absent

    int size() const { return static_cast<int>(token_ids.size()); }

    bool in_query(int i) const {
        return query_span.end >= query_span.begin && query_span.contains(i);
    }

    // Element ordinal owning token i, or -1 for graph tags and query tokens.
    int element_at(int i) const {
        for (std::size_t e = 0; e < element_spans.size(); ++e) {
            if (element_spans[e].contains(i)) {
                return static_cast<int>(e);
            }
        }
        return -1;
    }

    bool is_hub(int i) const {
        for (const int h : hub_index) {
            if (h == i) {
                return true;
            }
        }
        return false;
    }

    // Token indices holding graph structural tags (the adapter's activation
    // set): <g>, </g> and every element's open/close tag.
    std::vector<int> special_positions() const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i) {
            if (tok::is_graph_tag(token_ids[static_cast<std::size_t>(i)])) {
                out.push_back(i);
            }
        }
        return out;
    }
};

// Serializes the graph elements and query into one sequence. `answer` is
// appended after the question (plus <eoa>) for training sequences.
inline FlattenedSequence flatten(const Vocabulary& vocab, const TextGraph& g,
                                 const std::vector<UnifiedElement>& elements,
                                 std::string_view query,
                                 std::optional<std::string_view> answer = std::nullopt) {
    if (elements.empty()) {
        throw std::invalid_argument("cannot flatten an empty graph: no hubs to anchor");
    }
    FlattenedSequence seq;
    seq.elements = elements;
    seq.graph_start = 0;
    seq.token_ids.push_back(tok::graph_open);

    for (const UnifiedElement& el : elements) {
        const bool is_node = el.kind == ElementKind::node;
        const std::string& text =
            is_node ? g.nodes.at(static_cast<std::size_t>(el.source_index)).text
                    : g.edges.at(static_cast<std::size_t>(el.source_index)).text;
        const std::vector<int> content = vocab.tokenize(text);
        if (content.empty()) {
            throw std::invalid_argument("element has no content tokens");
        }
        TokenSpan span;
        span.begin = seq.size();
        seq.token_ids.push_back(is_node ? tok::node_open : tok::edge_open);
        seq.token_ids.insert(seq.token_ids.end(), content.begin(), content.end());
        seq.token_ids.push_back(is_node ? tok::node_close : tok::edge_close);
        span.end = seq.size() - 1;
        seq.element_spans.push_back(span);
        seq.hub_index.push_back(span.end);
    }

    seq.graph_hub = seq.size();
    seq.token_ids.push_back(tok::graph_close);

    const std::vector<int> question = vocab.tokenize(query);
    seq.query_span.begin = seq.size();
    seq.token_ids.insert(seq.token_ids.end(), question.begin(), question.end());
    if (answer) {
        const std::vector<int> gold = vocab.tokenize(*answer);
        seq.answer_start = seq.size();
        seq.token_ids.insert(seq.token_ids.end(), gold.begin(), gold.end());
        seq.token_ids.push_back(tok::end_of_answer);
    }
    seq.query_span.end = seq.size() - 1;
    if (seq.query_span.end < seq.query_span.begin) {
        throw std::invalid_argument("query produced no tokens");
    }
    return seq;
}

// Appends one decoded token as a query continuation.
inline void append_query_token(FlattenedSequence& seq, int token_id) {
    seq.token_ids.push_back(token_id);
    seq.query_span.end = seq.size() - 1;
}

}  // namespace nag
