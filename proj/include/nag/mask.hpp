#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nag/bitmatrix.hpp"
#include "nag/flatten.hpp"
#include "nag/graph.hpp"

namespace nag {

enum class QueryMode { sparse, full };

inline const char* query_mode_name(QueryMode m) {
    return m == QueryMode::sparse ? "sparse" : "full";
}

inline std::optional<QueryMode> query_mode_from_name(std::string_view name) {
    if (name == "sparse") {
        return QueryMode::sparse;
    }
    if (name == "full") {
        return QueryMode::full;
    }
    return std::nullopt;
}

// Level 1: causal attention inside each element span, zero across spans.
inline BitMatrix intra_mask(const FlattenedSequence& seq) {
    BitMatrix m(seq.size());
    for (const TokenSpan& span : seq.element_spans) {
        for (int i = span.begin; i <= span.end; ++i) {
            for (int j = span.begin; j <= i; ++j) {
                m.set(i, j);
            }
        }
    }
    return m;
}

// Level 2: directed flow source hub -> edge hub -> target hub, mirrored for
// undirected graphs. A self-loop wires hub(e) and hub(v) both ways.
inline BitMatrix inter_mask(const FlattenedSequence& seq, const TextGraph& g) {
    BitMatrix m(seq.size());
    std::unordered_map<int, int> node_hub;  // node index -> hub token index
    std::vector<std::pair<int, int>> edge_hubs;  // (edge index, hub token index)
    for (std::size_t e = 0; e < seq.elements.size(); ++e) {
        const UnifiedElement& el = seq.elements[e];
        if (el.kind == ElementKind::node) {
            node_hub[el.source_index] = seq.hub_index[e];
        } else {
            edge_hubs.push_back({el.source_index, seq.hub_index[e]});
        }
    }
    for (const auto& [edge_index, hub_e] : edge_hubs) {
        const Edge& edge = g.edges.at(static_cast<std::size_t>(edge_index));
        const int src = g.node_index(edge.src);
        const int dst = g.node_index(edge.dst);
        const auto hub_src = node_hub.find(src);
        const auto hub_dst = node_hub.find(dst);
        if (src < 0 || dst < 0 || hub_src == node_hub.end() || hub_dst == node_hub.end()) {
            throw std::invalid_argument("edge endpoint missing from the flattened elements");
        }
        m.set(hub_e, hub_src->second);
        m.set(hub_dst->second, hub_e);
        if (!g.directed) {
            m.set(hub_e, hub_dst->second);
            m.set(hub_src->second, hub_e);
        }
    }
    return m;
}

// Level 3: </g> aggregates every element hub; <g> is visible to every row.
inline BitMatrix global_mask(const FlattenedSequence& seq) {
    BitMatrix m(seq.size());
    for (const int hub : seq.hub_index) {
        m.set(seq.graph_hub, hub);
    }
    for (int i = 0; i < seq.size(); ++i) {
        m.set(i, seq.graph_start);
    }
    return m;
}

// Level 4: query rows are causal among themselves and, in sparse mode, see
// the element hubs; in full mode they see everything at or before them.
inline BitMatrix query_mask(const FlattenedSequence& seq, QueryMode mode,
                            bool query_sees_graph_hub = false) {
    BitMatrix m(seq.size());
    if (seq.query_span.end < seq.query_span.begin) {
        return m;
    }
    for (int i = seq.query_span.begin; i <= seq.query_span.end; ++i) {
        if (mode == QueryMode::full) {
            for (int j = 0; j <= i; ++j) {
                m.set(i, j);
            }
            continue;
        }
        for (int j = seq.query_span.begin; j <= i; ++j) {
            m.set(i, j);
        }
        for (const int hub : seq.hub_index) {
            m.set(i, hub);
        }
        if (query_sees_graph_hub) {
            m.set(i, seq.graph_hub);
        }
    }
    return m;
}

struct LevelMasks {
    BitMatrix intra;
    BitMatrix inter;
    BitMatrix global;
    BitMatrix query;
};

struct MaskOptions {
    bool query_sees_graph_hub = false;
    bool retain_components = false;
};

struct TopoMask {
    int size = 0;
    QueryMode mode = QueryMode::sparse;
    BitMatrix bits;
    std::optional<LevelMasks> components;
};

// Disjunction of the four levels.
inline TopoMask compose_mask(const FlattenedSequence& seq, const TextGraph& g, QueryMode mode,
                             const MaskOptions& opts = {}) {
    TopoMask mask;
    mask.size = seq.size();
    mask.mode = mode;
    LevelMasks levels{intra_mask(seq), inter_mask(seq, g), global_mask(seq),
                      query_mask(seq, mode, opts.query_sees_graph_hub)};
    mask.bits = levels.intra;
    mask.bits.or_with(levels.inter);
    mask.bits.or_with(levels.global);
    mask.bits.or_with(levels.query);
    if (opts.retain_components) {
        mask.components = std::move(levels);
    }
    return mask;
}

// Plain lower-triangular mask for text-only sequences.
inline BitMatrix causal_mask(int n) {
    BitMatrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            m.set(i, j);
        }
    }
    return m;
}

// Binary PGM: 0 = masked, 255 = visible.
inline void write_mask_pgm(const BitMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << "P5\n" << m.size() << " " << m.size() << "\n255\n";
    for (int i = 0; i < m.size(); ++i) {
        for (int j = 0; j < m.size(); ++j) {
            out.put(m.get(i, j) ? static_cast<char>(255) : static_cast<char>(0));
        }
    }
}

// Header (u32 size, u8 mode) + row-major packed bits, little-endian. Each row
// is padded to a whole byte; bit j of a row lives at byte j/8, bit j%8.
inline void write_mask_bits(const TopoMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    const std::uint32_t n = static_cast<std::uint32_t>(mask.size);
    for (int b = 0; b < 4; ++b) {
        out.put(static_cast<char>((n >> (8 * b)) & 0xFF));
    }
    out.put(mask.mode == QueryMode::sparse ? 0 : 1);
    const int bytes_per_row = (mask.size + 7) / 8;
    for (int i = 0; i < mask.size; ++i) {
        for (int b = 0; b < bytes_per_row; ++b) {
            unsigned char byte = 0;
            for (int k = 0; k < 8; ++k) {
                const int j = b * 8 + k;
                if (j < mask.size && mask.bits.get(i, j)) {
                    byte |= static_cast<unsigned char>(1u << k);
                }
            }
            out.put(static_cast<char>(byte));
        }
    }
}

}  // namespace nag
