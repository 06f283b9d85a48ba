#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nag/flatten.hpp"

namespace nag {

enum class PositionScheme { recalibrated, sequential };

inline const char* position_scheme_name(PositionScheme s) {
    return s == PositionScheme::recalibrated ? "recalibrated" : "sequential";
}

inline std::optional<PositionScheme> position_scheme_from_name(std::string_view name) {
    if (name == "recalibrated") {
        return PositionScheme::recalibrated;
    }
    if (name == "sequential") {
        return PositionScheme::sequential;
    }
    return std::nullopt;
}

struct PositionAssignment {
    std::vector<int> ids;
    PositionScheme scheme = PositionScheme::recalibrated;
    int p_start = 0;  // position of <g>
    int p_hub = 0;    // shared hub position (recalibrated only)
};

// Hub-synchronized indexing: ids inside an element increment naturally from
// the open tag at p_start + 1, and every closing tag is overridden to
// p_hub = p_start + max element length (tags included). </g> gets p_hub + 1
// and query ids continue incrementing from p_hub + 2.
inline PositionAssignment assign_recalibrated(const FlattenedSequence& seq, int p_start = 0) {
    PositionAssignment pa;
    pa.scheme = PositionScheme::recalibrated;
    pa.p_start = p_start;
    int max_len = 0;
    for (const TokenSpan& span : seq.element_spans) {
        max_len = std::max(max_len, span.length());
    }
    pa.p_hub = p_start + max_len;
    pa.ids.assign(static_cast<std::size_t>(seq.size()), 0);
    pa.ids[static_cast<std::size_t>(seq.graph_start)] = p_start;
    for (std::size_t e = 0; e < seq.element_spans.size(); ++e) {
        const TokenSpan& span = seq.element_spans[e];
        for (int i = span.begin; i < span.end; ++i) {
            pa.ids[static_cast<std::size_t>(i)] = p_start + 1 + (i - span.begin);
        }
        pa.ids[static_cast<std::size_t>(span.end)] = pa.p_hub;
    }
    pa.ids[static_cast<std::size_t>(seq.graph_hub)] = pa.p_hub + 1;
    for (int i = seq.graph_hub + 1; i < seq.size(); ++i) {
        pa.ids[static_cast<std::size_t>(i)] = pa.p_hub + 2 + (i - seq.graph_hub - 1);
    }
    return pa;
}

// Plain token-order indexing (the ablation baseline).
inline PositionAssignment assign_sequential(const FlattenedSequence& seq) {
    PositionAssignment pa;
    pa.scheme = PositionScheme::sequential;
    pa.p_start = seq.graph_start;
    pa.p_hub = 0;
    pa.ids.resize(static_cast<std::size_t>(seq.size()));
    for (int i = 0; i < seq.size(); ++i) {
        pa.ids[static_cast<std::size_t>(i)] = i;
    }
    return pa;
}

inline PositionAssignment assign_positions(const FlattenedSequence& seq, PositionScheme scheme) {
    return scheme == PositionScheme::recalibrated ? assign_recalibrated(seq)
                                                  : assign_sequential(seq);
}

}  // namespace nag
