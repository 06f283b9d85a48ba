#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nag/graph.hpp"
#include "nag/rng.hpp"

namespace nag {

enum class TextEncodingScheme {
    adjacency,
    expert,
    friendship,
    got,
    politician,
    social_network,
    south_park,
};

inline constexpr std::array<TextEncodingScheme, 7> kAllEncodings = {
    TextEncodingScheme::adjacency,  TextEncodingScheme::expert,
    TextEncodingScheme::friendship, TextEncodingScheme::got,
    TextEncodingScheme::politician, TextEncodingScheme::social_network,
    TextEncodingScheme::south_park,
};

inline const char* encoding_name(TextEncodingScheme s) {
    switch (s) {
        case TextEncodingScheme::adjacency: return "adjacency";
        case TextEncodingScheme::expert: return "expert";
        case TextEncodingScheme::friendship: return "friendship";
        case TextEncodingScheme::got: return "got";
        case TextEncodingScheme::politician: return "politician";
        case TextEncodingScheme::social_network: return "social-network";
        case TextEncodingScheme::south_park: return "south-park";
    }
    throw std::logic_error("unreachable encoding");
}

inline std::optional<TextEncodingScheme> encoding_from_name(std::string_view name) {
    for (const TextEncodingScheme s : kAllEncodings) {
        if (name == encoding_name(s)) {
            return s;
        }
    }
    return std::nullopt;
}

// Wording the question templates draw from, per scheme.
struct SchemeVocab {
    std::string_view entity_singular;
    std::string_view entity_plural;
    std::string_view relation_singular;
    std::string_view relation_plural;
    std::string_view edge_phrase;  // becomes every edge's text
};

inline const SchemeVocab& scheme_vocab(TextEncodingScheme s) {
    static const SchemeVocab adjacency{"node", "nodes", "edge", "edges", "is connected to"};
    static const SchemeVocab expert{"node", "nodes", "edge", "edges", "is connected to"};
    static const SchemeVocab friendship{"person", "people", "friendship", "friendships",
                                        "is friends with"};
    static const SchemeVocab got{"character", "characters", "connection", "connections",
                                 "is allied with"};
    static const SchemeVocab politician{"politician", "politicians", "connection", "connections",
                                        "works with"};
    static const SchemeVocab social{"person", "people", "connection", "connections",
                                    "is linked to"};
    static const SchemeVocab south_park{"character", "characters", "connection", "connections",
                                        "hangs out with"};
    switch (s) {
        case TextEncodingScheme::adjacency: return adjacency;
        case TextEncodingScheme::expert: return expert;
        case TextEncodingScheme::friendship: return friendship;
        case TextEncodingScheme::got: return got;
        case TextEncodingScheme::politician: return politician;
        case TextEncodingScheme::social_network: return social;
        case TextEncodingScheme::south_park: return south_park;
    }
    throw std::logic_error("unreachable encoding");
}

namespace detail {

// Small placeholder pools; each holds >= 20 single-word names.
inline const std::vector<std::string>& name_pool(TextEncodingScheme s) {
    static const std::vector<std::string> friendship = {
        "Alice", "Bob",    "Carol", "David",  "Emma",  "Frank", "Grace", "Henry",
        "Irene", "Jack",   "Karen", "Liam",   "Mona",  "Noah",  "Olivia", "Paul",
        "Quinn", "Rachel", "Sam",   "Tina",   "Uma",   "Victor", "Wendy", "Xavier"};
    static const std::vector<std::string> got = {
        "Ned",    "Arya",   "Sansa",  "Robb",   "Bran",   "Jon",   "Catelyn", "Tyrion",
        "Cersei", "Jaime",  "Daenerys", "Jorah", "Brienne", "Sandor", "Petyr", "Varys",
        "Samwell", "Gilly", "Davos",  "Melisandre", "Theon", "Yara", "Ramsay", "Gendry"};
    static const std::vector<std::string> politician = {
        "Adams",  "Baker",  "Carter", "Dole",    "Edwards", "Ford",   "Gore",    "Harding",
        "Irving", "Jackson", "Kennedy", "Lincoln", "Monroe",  "Nixon",  "Obama",   "Pierce",
        "Quayle", "Reagan", "Sanders", "Truman",  "Udall",   "Vance",  "Warren",  "Young"};
    static const std::vector<std::string> social = {
        "Aiden",  "Bella", "Caleb",  "Daisy", "Ethan",  "Fiona", "Gavin", "Hazel",
        "Isaac",  "Jade",  "Kyle",   "Luna",  "Mason",  "Nora",  "Owen",  "Piper",
        "Quentin", "Ruby", "Silas",  "Tessa", "Ulysses", "Violet", "Wyatt", "Zoe"};
    static const std::vector<std::string> south_park = {
        "Stan",    "Kyle",   "Cartman", "Kenny",  "Butters", "Wendy",  "Randy",  "Sharon",
        "Gerald",  "Sheila", "Token",   "Jimmy",  "Timmy",   "Craig",  "Tweek",  "Clyde",
        "Bebe",    "Heidi",  "Garrison", "Mackey", "Chef",    "Terrance", "Phillip", "Ike"};
    switch (s) {
        case TextEncodingScheme::friendship: return friendship;
        case TextEncodingScheme::got: return got;
        case TextEncodingScheme::politician: return politician;
        case TextEncodingScheme::social_network: return social;
        case TextEncodingScheme::south_park: return south_park;
        default: throw std::logic_error("scheme has no name pool");
    }
}

}  // namespace detail

// Node names the scheme would assign to a graph with n nodes, in node order.
// Numbering schemes assign by index; name pools are sampled without
// replacement using the rng.
inline std::vector<std::string> encoding_node_names(TextEncodingScheme s, int n, Rng& rng) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n));
    switch (s) {
        case TextEncodingScheme::adjacency:
            for (int i = 0; i < n; ++i) {
                names.push_back(std::to_string(i));
            }
            return names;
        case TextEncodingScheme::expert: {
            if (n > 26) {
                throw std::invalid_argument("expert encoding name pool exhausted (max 26 nodes)");
            }
            for (int i = 0; i < n; ++i) {
                names.push_back(std::string(1, static_cast<char>('A' + i)));
            }
            return names;
        }
        default: {
            const auto& pool = detail::name_pool(s);
            if (static_cast<std::size_t>(n) > pool.size()) {
                throw std::invalid_argument(std::string(encoding_name(s)) +
                                            " encoding name pool exhausted");
            }
            for (const int idx : rng.sample_indices(static_cast<int>(pool.size()), n)) {
                names.push_back(pool[static_cast<std::size_t>(idx)]);
            }
            return names;
        }
    }
}

// Replaces node texts with scheme names and every edge text with the scheme's
// relation phrase. Topology and node identifiers are untouched.
inline TextGraph apply_text_encoding(const TextGraph& g, TextEncodingScheme s, std::uint64_t seed) {
    Rng rng(seed);
    TextGraph out = g;
    const auto names = encoding_node_names(s, static_cast<int>(g.nodes.size()), rng);
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        out.nodes[i].text = names[i];
    }
    const SchemeVocab& vocab = scheme_vocab(s);
    for (Edge& e : out.edges) {
        e.text = std::string(vocab.edge_phrase);
    }
    return out;
}

}  // namespace nag
