#pragma once

// Independent per-pair evaluator of the four visibility levels, written
// directly from their defining predicates. Deliberately naive: it never
// touches the production builders, so it can arbitrate them.

#include "nag/bitmatrix.hpp"
#include "nag/flatten.hpp"
#include "nag/graph.hpp"
#include "nag/mask.hpp"

namespace nag_test {

inline bool oracle_intra(const nag::FlattenedSequence& seq, int i, int j) {
    for (const nag::TokenSpan& span : seq.element_spans) {
        if (span.contains(i) && span.contains(j) && j <= i) {
            return true;
        }
    }
    return false;
}

inline bool oracle_inter(const nag::FlattenedSequence& seq, const nag::TextGraph& g, int i,
                         int j) {
    for (std::size_t e = 0; e < seq.elements.size(); ++e) {
        if (seq.elements[e].kind != nag::ElementKind::edge) {
            continue;
        }
        const nag::Edge& edge = g.edges[static_cast<std::size_t>(seq.elements[e].source_index)];
        const int hub_e = seq.hub_index[e];
        int hub_src = -1;
        int hub_dst = -1;
        for (std::size_t v = 0; v < seq.elements.size(); ++v) {
            if (seq.elements[v].kind != nag::ElementKind::node) {
                continue;
            }
            const nag::Node& node =
                g.nodes[static_cast<std::size_t>(seq.elements[v].source_index)];
            if (node.id == edge.src) {
                hub_src = seq.hub_index[v];
            }
            if (node.id == edge.dst) {
                hub_dst = seq.hub_index[v];
            }
        }
        if ((i == hub_e && j == hub_src) || (i == hub_dst && j == hub_e)) {
            return true;
        }
        if (!g.directed && ((i == hub_e && j == hub_dst) || (i == hub_src && j == hub_e))) {
            return true;
        }
    }
    return false;
}

inline bool oracle_global(const nag::FlattenedSequence& seq, int i, int j) {
    if (j == seq.graph_start) {
        return true;
    }
    if (i != seq.graph_hub) {
        return false;
    }
    for (const int hub : seq.hub_index) {
        if (j == hub) {
            return true;
        }
    }
    return false;
}

inline bool oracle_query(const nag::FlattenedSequence& seq, nag::QueryMode mode, int i, int j,
                         bool sees_graph_hub) {
    const bool i_in_q = seq.in_query(i);
    if (!i_in_q) {
        return false;
    }
    if (mode == nag::QueryMode::full) {
        return j <= i;
    }
    if (seq.in_query(j) && j <= i) {
        return true;
    }
    for (const int hub : seq.hub_index) {
        if (j == hub) {
            return true;
        }
    }
    return sees_graph_hub && j == seq.graph_hub;
}

inline bool oracle_visible(const nag::FlattenedSequence& seq, const nag::TextGraph& g,
                           nag::QueryMode mode, int i, int j, bool sees_graph_hub = false) {
    return oracle_intra(seq, i, j) || oracle_inter(seq, g, i, j) || oracle_global(seq, i, j) ||
           oracle_query(seq, mode, i, j, sees_graph_hub);
}

inline nag::BitMatrix oracle_mask(const nag::FlattenedSequence& seq, const nag::TextGraph& g,
                                  nag::QueryMode mode, bool sees_graph_hub = false) {
    nag::BitMatrix m(seq.size());
    for (int i = 0; i < seq.size(); ++i) {
        for (int j = 0; j < seq.size(); ++j) {
            if (oracle_visible(seq, g, mode, i, j, sees_graph_hub)) {
                m.set(i, j);
            }
        }
    }
    return m;
}

}  // namespace nag_test
