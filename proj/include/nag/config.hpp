#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nag/mask.hpp"
#include "nag/positions.hpp"

namespace nag {

enum class Variant { backbone, nag_zero, nag_lora };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::backbone: return "backbone";
        case Variant::nag_zero: return "nag-zero";
        case Variant::nag_lora: return "nag-lora";
    }
    throw std::logic_error("unreachable variant");
}

inline std::optional<Variant> variant_from_name(std::string_view name) {
    if (name == "backbone") {
        return Variant::backbone;
    }
    if (name == "nag-zero") {
        return Variant::nag_zero;
    }
    if (name == "nag-lora") {
        return Variant::nag_lora;
    }
    return std::nullopt;
}

struct ModelConfig {
    int layers = 4;
    int heads = 4;
    int head_dim = 32;
    int ffn_dim = 512;
    double rope_base = 10000.0;
    int vocab_size = 0;
    Variant variant = Variant::backbone;
    int adapter_rank = 32;
    int lora_rank = 8;
    double lora_alpha = 16.0;
    QueryMode query_mode = QueryMode::sparse;
    PositionScheme position_scheme = PositionScheme::recalibrated;
    bool query_sees_graph_hub = false;

    int model_dim() const { return heads * head_dim; }

    void validate() const {
        if (layers < 1 || heads < 1 || head_dim < 2 || ffn_dim < 1) {
            throw std::invalid_argument("model dimensions must be positive");
        }
        if (head_dim % 2 != 0) {
            throw std::invalid_argument("head_dim must be even for rotary embeddings");
        }
        if (vocab_size <= 0) {
            throw std::invalid_argument("vocab_size must be set");
        }
        if (adapter_rank < 1 || adapter_rank >= model_dim()) {
            throw std::invalid_argument("adapter_rank must satisfy 0 < r < model_dim");
        }
        if (lora_rank < 1) {
            throw std::invalid_argument("lora_rank must be positive");
        }
    }
};

inline nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"layers", c.layers},
            {"heads", c.heads},
            {"head_dim", c.head_dim},
            {"ffn_dim", c.ffn_dim},
            {"rope_base", c.rope_base},
            {"vocab_size", c.vocab_size},
            {"variant", variant_name(c.variant)},
            {"adapter_rank", c.adapter_rank},
            {"lora_rank", c.lora_rank},
            {"lora_alpha", c.lora_alpha},
            {"query_mode", query_mode_name(c.query_mode)},
            {"position_scheme", position_scheme_name(c.position_scheme)},
            {"query_sees_graph_hub", c.query_sees_graph_hub}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.head_dim = j.value("head_dim", c.head_dim);
    c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
    c.rope_base = j.value("rope_base", c.rope_base);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.adapter_rank = j.value("adapter_rank", c.adapter_rank);
    c.lora_rank = j.value("lora_rank", c.lora_rank);
    c.lora_alpha = j.value("lora_alpha", c.lora_alpha);
    c.query_sees_graph_hub = j.value("query_sees_graph_hub", c.query_sees_graph_hub);
    if (j.contains("variant")) {
        const auto v = variant_from_name(j.at("variant").get<std::string>());
        if (!v) {
            throw std::invalid_argument("unknown variant in config");
        }
        c.variant = *v;
    }
    if (j.contains("query_mode")) {
        const auto m = query_mode_from_name(j.at("query_mode").get<std::string>());
        if (!m) {
            throw std::invalid_argument("unknown query_mode in config");
        }
        c.query_mode = *m;
    }
    if (j.contains("position_scheme")) {
        const auto s = position_scheme_from_name(j.at("position_scheme").get<std::string>());
        if (!s) {
            throw std::invalid_argument("unknown position_scheme in config");
        }
        c.position_scheme = *s;
    }
    return c;
}

}  // namespace nag
