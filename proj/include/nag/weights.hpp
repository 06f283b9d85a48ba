#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nag/config.hpp"
#include "nag/rng.hpp"
#include "nag/tensor.hpp"
#include "nag/vocab.hpp"

namespace nag {

template <typename T>
struct LayerWeights {
    Mat<T> attn_norm;  // 1 x d
    Mat<T> wq, wk, wv, wo;  // d x d
    Mat<T> ffn_norm;   // 1 x d
    Mat<T> w_gate, w_up;  // d x ffn
    Mat<T> w_down;        // ffn x d
};

// Gated low-rank adapter between two layers; active only at structural tokens.
template <typename T>
struct AdapterSlot {
    Mat<T> gate_down;   // r x d
    Mat<T> gate_up;     // d x r
    Mat<T> value_down;  // r x d
    Mat<T> value_up;    // d x r
};

template <typename T>
struct LoraPair {
    Mat<T> down;  // rank x d
    Mat<T> up;    // d x rank
};

template <typename T>
struct LoraLayer {
    LoraPair<T> q, k, v;
};

template <typename T>
struct ModelWeights {
    Mat<T> embed;  // vocab x d
    std::vector<LayerWeights<T>> layers;
    Mat<T> final_norm;  // 1 x d
    Mat<T> head;        // d x vocab
    std::vector<AdapterSlot<T>> adapters;  // layers-1 slots (nag-zero)
    std::vector<LoraLayer<T>> lora;        // per layer (nag-lora)
};

enum class TensorRole { embedding, backbone, head, adapter, lora };

// Visits every tensor with a stable name and its role. Used by the
// optimizer, checkpoint io, and the gradient checks.
template <typename T, typename F>
void for_each_tensor(ModelWeights<T>& w, F&& fn) {
    fn("embed", w.embed, TensorRole::embedding);
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        LayerWeights<T>& lw = w.layers[l];
        fn(p + "attn_norm", lw.attn_norm, TensorRole::backbone);
        fn(p + "wq", lw.wq, TensorRole::backbone);
        fn(p + "wk", lw.wk, TensorRole::backbone);
        fn(p + "wv", lw.wv, TensorRole::backbone);
        fn(p + "wo", lw.wo, TensorRole::backbone);
        fn(p + "ffn_norm", lw.ffn_norm, TensorRole::backbone);
        fn(p + "w_gate", lw.w_gate, TensorRole::backbone);
        fn(p + "w_up", lw.w_up, TensorRole::backbone);
        fn(p + "w_down", lw.w_down, TensorRole::backbone);
    }
    fn("final_norm", w.final_norm, TensorRole::backbone);
    fn("head", w.head, TensorRole::head);
    for (std::size_t a = 0; a < w.adapters.size(); ++a) {
        const std::string p = "adapters." + std::to_string(a) + ".";
        AdapterSlot<T>& slot = w.adapters[a];
        fn(p + "gate_down", slot.gate_down, TensorRole::adapter);
        fn(p + "gate_up", slot.gate_up, TensorRole::adapter);
        fn(p + "value_down", slot.value_down, TensorRole::adapter);
        fn(p + "value_up", slot.value_up, TensorRole::adapter);
    }
    for (std::size_t l = 0; l < w.lora.size(); ++l) {
        const std::string p = "lora." + std::to_string(l) + ".";
        LoraLayer<T>& ll = w.lora[l];
        fn(p + "q.down", ll.q.down, TensorRole::lora);
        fn(p + "q.up", ll.q.up, TensorRole::lora);
        fn(p + "k.down", ll.k.down, TensorRole::lora);
        fn(p + "k.up", ll.k.up, TensorRole::lora);
        fn(p + "v.down", ll.v.down, TensorRole::lora);
        fn(p + "v.up", ll.v.up, TensorRole::lora);
    }
}

template <typename T, typename F>
void for_each_tensor(const ModelWeights<T>& w, F&& fn) {
    for_each_tensor(const_cast<ModelWeights<T>&>(w),
                    [&fn](const std::string& name, Mat<T>& m, TensorRole role) {
                        fn(name, static_cast<const Mat<T>&>(m), role);
                    });
}

// How a tensor participates in training under the config's variant.
enum class Trainability { full, special_rows, frozen };

inline Trainability trainability(TensorRole role, Variant variant) {
    switch (variant) {
        case Variant::backbone:
            return role == TensorRole::adapter || role == TensorRole::lora
                       ? Trainability::frozen
                       : Trainability::full;
        case Variant::nag_zero:
            if (role == TensorRole::adapter) {
                return Trainability::full;
            }
            return role == TensorRole::embedding ? Trainability::special_rows
                                                 : Trainability::frozen;
        case Variant::nag_lora:
            if (role == TensorRole::lora) {
                return Trainability::full;
            }
            return role == TensorRole::embedding ? Trainability::special_rows
                                                 : Trainability::frozen;
    }
    throw std::logic_error("unreachable variant");
}

// Embedding rows trainable under the NAG variants: the six graph tags.
inline bool is_special_embedding_row(int row) {
    return row >= tok::graph_open && row <= tok::edge_close;
}

// Up-projections start at zero so adapted variants equal the backbone at
// step 0; the rest uses fan-in scaled gaussians with the residual branches
// damped by depth.
template <typename T>
ModelWeights<T> init_weights(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int d = cfg.model_dim();
    Rng rng(derive_seed(seed, 0xABCD));
    ModelWeights<T> w;

    w.embed = Mat<T>(cfg.vocab_size, d);
    fill_normal(w.embed, rng, 0.1);

    const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
    const double resid_std = proj_std / std::sqrt(2.0 * cfg.layers);
    const double ffn_std = 1.0 / std::sqrt(static_cast<double>(cfg.ffn_dim));
    for (int l = 0; l < cfg.layers; ++l) {
        LayerWeights<T> lw;
        lw.attn_norm = Mat<T>::Ones(1, d);
        lw.ffn_norm = Mat<T>::Ones(1, d);
        lw.wq = Mat<T>(d, d);
        lw.wk = Mat<T>(d, d);
        lw.wv = Mat<T>(d, d);
        lw.wo = Mat<T>(d, d);
        fill_normal(lw.wq, rng, proj_std);
        fill_normal(lw.wk, rng, proj_std);
        fill_normal(lw.wv, rng, proj_std);
        fill_normal(lw.wo, rng, resid_std);
        lw.w_gate = Mat<T>(d, cfg.ffn_dim);
        lw.w_up = Mat<T>(d, cfg.ffn_dim);
        lw.w_down = Mat<T>(cfg.ffn_dim, d);
        fill_normal(lw.w_gate, rng, proj_std);
        fill_normal(lw.w_up, rng, proj_std);
        fill_normal(lw.w_down, rng, ffn_std / std::sqrt(2.0 * cfg.layers));
        w.layers.push_back(std::move(lw));
    }
    w.final_norm = Mat<T>::Ones(1, d);
    w.head = Mat<T>(d, cfg.vocab_size);
    fill_normal(w.head, rng, proj_std);

    if (cfg.variant == Variant::nag_zero) {
        const int r = cfg.adapter_rank;
        for (int l = 0; l + 1 < cfg.layers; ++l) {
            AdapterSlot<T> slot;
            slot.gate_down = Mat<T>(r, d);
            slot.gate_up = Mat<T>(d, r);
            slot.value_down = Mat<T>(r, d);
            slot.value_up = Mat<T>::Zero(d, r);
            fill_normal(slot.gate_down, rng, 0.02);
            fill_normal(slot.gate_up, rng, 0.02);
            fill_normal(slot.value_down, rng, proj_std);
            w.adapters.push_back(std::move(slot));
        }
    }
    if (cfg.variant == Variant::nag_lora) {
        const int r = cfg.lora_rank;
        for (int l = 0; l < cfg.layers; ++l) {
            LoraLayer<T> ll;
            for (LoraPair<T>* pair : {&ll.q, &ll.k, &ll.v}) {
                pair->down = Mat<T>(r, d);
                fill_normal(pair->down, rng, proj_std);
                pair->up = Mat<T>::Zero(d, r);
            }
            w.lora.push_back(std::move(ll));
        }
    }
    return w;
}

template <typename T>
ModelWeights<T> zeros_like(const ModelWeights<T>& w) {
    ModelWeights<T> z;
    z.embed = Mat<T>::Zero(w.embed.rows(), w.embed.cols());
    for (const LayerWeights<T>& lw : w.layers) {
        LayerWeights<T> zl;
        zl.attn_norm = Mat<T>::Zero(lw.attn_norm.rows(), lw.attn_norm.cols());
        zl.wq = Mat<T>::Zero(lw.wq.rows(), lw.wq.cols());
        zl.wk = Mat<T>::Zero(lw.wk.rows(), lw.wk.cols());
        zl.wv = Mat<T>::Zero(lw.wv.rows(), lw.wv.cols());
        zl.wo = Mat<T>::Zero(lw.wo.rows(), lw.wo.cols());
        zl.ffn_norm = Mat<T>::Zero(lw.ffn_norm.rows(), lw.ffn_norm.cols());
        zl.w_gate = Mat<T>::Zero(lw.w_gate.rows(), lw.w_gate.cols());
        zl.w_up = Mat<T>::Zero(lw.w_up.rows(), lw.w_up.cols());
        zl.w_down = Mat<T>::Zero(lw.w_down.rows(), lw.w_down.cols());
        z.layers.push_back(std::move(zl));
    }
    z.final_norm = Mat<T>::Zero(w.final_norm.rows(), w.final_norm.cols());
    z.head = Mat<T>::Zero(w.head.rows(), w.head.cols());
    for (const AdapterSlot<T>& slot : w.adapters) {
        AdapterSlot<T> zs;
        zs.gate_down = Mat<T>::Zero(slot.gate_down.rows(), slot.gate_down.cols());
        zs.gate_up = Mat<T>::Zero(slot.gate_up.rows(), slot.gate_up.cols());
        zs.value_down = Mat<T>::Zero(slot.value_down.rows(), slot.value_down.cols());
        zs.value_up = Mat<T>::Zero(slot.value_up.rows(), slot.value_up.cols());
        z.adapters.push_back(std::move(zs));
    }
    for (const LoraLayer<T>& ll : w.lora) {
        LoraLayer<T> zl;
        for (auto [src, dst] : {std::pair{&ll.q, &zl.q}, {&ll.k, &zl.k}, {&ll.v, &zl.v}}) {
            dst->down = Mat<T>::Zero(src->down.rows(), src->down.cols());
            dst->up = Mat<T>::Zero(src->up.rows(), src->up.cols());
        }
        z.lora.push_back(std::move(zl));
    }
    return z;
}

template <typename T>
void set_zero(ModelWeights<T>& w) {
    for_each_tensor(w, [](const std::string&, Mat<T>& m, TensorRole) { m.setZero(); });
}

template <typename T>
void accumulate(ModelWeights<T>& into, const ModelWeights<T>& from) {
    std::vector<Mat<T>*> dst;
    for_each_tensor(into, [&dst](const std::string&, Mat<T>& m, TensorRole) { dst.push_back(&m); });
    std::size_t i = 0;
    for_each_tensor(from, [&dst, &i](const std::string&, const Mat<T>& m, TensorRole) {
        *dst[i++] += m;
    });
}

template <typename T>
void scale(ModelWeights<T>& w, T factor) {
    for_each_tensor(w, [factor](const std::string&, Mat<T>& m, TensorRole) { m *= factor; });
}

// Tensor-bundle checkpoint: manifest.json (config + tensor table) plus one
// little-endian row-major binary file per tensor, and the vocabulary.
template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const ModelWeights<T>& w,
                     const ModelConfig& cfg, const Vocabulary& vocab) {
    std::filesystem::create_directories(dir);
    nlohmann::json tensors = nlohmann::json::array();
    for_each_tensor(w, [&tensors, &dir](const std::string& name, const Mat<T>& m, TensorRole) {
        const std::string file = name + ".bin";
        write_tensor(dir / file, m);
        tensors.push_back({{"name", name},
                           {"dtype", dtype_name<T>()},
                           {"shape", {m.rows(), m.cols()}},
                           {"file", file}});
    });
    const nlohmann::json manifest = {{"format", "nag-tensor-bundle"},
                                     {"version", 1},
                                     {"config", config_to_json(cfg)},
                                     {"tensors", tensors}};
    std::ofstream mf(dir / "manifest.json");
    mf << manifest.dump(2) << "\n";
    std::ofstream vf(dir / "vocab.json");
    vf << vocab.to_json().dump() << "\n";
}

template <typename T>
void write_tensor(const std::filesystem::path& path, const Mat<T>& m) {
    write_tensor(path.string(), m);
}

struct Checkpoint {
    ModelConfig config;
    ModelWeights<float> weights;
    Vocabulary vocab;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) {
        throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
    }
    nlohmann::json manifest;
    mf >> manifest;
    if (manifest.value("format", "") != "nag-tensor-bundle") {
        throw std::runtime_error("not a tensor-bundle checkpoint: " + dir.string());
    }
    Checkpoint ckpt;
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.config.validate();

    std::ifstream vf(dir / "vocab.json");
    if (!vf) {
        throw std::runtime_error("checkpoint is missing vocab.json");
    }
    nlohmann::json vj;
    vf >> vj;
    ckpt.vocab = Vocabulary::from_json(vj);

    // Allocate the weight structure, then fill from the manifest table.
    ckpt.weights = init_weights<float>(ckpt.config, 0);
    std::unordered_map<std::string, Mat<float>*> by_name;
    for_each_tensor(ckpt.weights, [&by_name](const std::string& name, Mat<float>& m, TensorRole) {
        by_name[name] = &m;
    });
    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw std::runtime_error("checkpoint tensor " + name + " does not fit the config");
        }
        const auto shape = entry.at("shape");
        const Eigen::Index rows = shape.at(0).get<Eigen::Index>();
        const Eigen::Index cols = shape.at(1).get<Eigen::Index>();
        const std::string file = (dir / entry.at("file").get<std::string>()).string();
        if (entry.at("dtype").get<std::string>() == std::string(dtype_name<float>())) {
            *it->second = read_tensor<float>(file, rows, cols);
        } else {
            *it->second = read_tensor<double>(file, rows, cols).template cast<float>();
        }
        by_name.erase(it);
    }
    if (!by_name.empty()) {
        throw std::runtime_error("checkpoint is missing tensor " + by_name.begin()->first);
    }
    return ckpt;
}

}  // namespace nag
