#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nag/bitmatrix.hpp"
#include "nag/config.hpp"
#include "nag/flatten.hpp"
#include "nag/graph.hpp"
#include "nag/mask.hpp"
#include "nag/positions.hpp"
#include "nag/tensor.hpp"
#include "nag/vocab.hpp"
#include "nag/weights.hpp"

namespace nag {

inline constexpr double kRmsEps = 1e-5;

// Rotation table for a position assignment: cos/sin of pos * base^(-2k/hd)
// per coordinate pair k, shared by every layer of a forward pass.
template <typename T>
struct RopeTable {
    Mat<T> c;  // s x hd/2
    Mat<T> s;
};

template <typename T>
RopeTable<T> make_rope_table(const std::vector<int>& positions, int head_dim, double base) {
    const int half = head_dim / 2;
    RopeTable<T> t;
    t.c = Mat<T>(static_cast<Eigen::Index>(positions.size()), half);
    t.s = Mat<T>(static_cast<Eigen::Index>(positions.size()), half);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (int k = 0; k < half; ++k) {
            const double freq = std::pow(base, -2.0 * k / head_dim);
            const double angle = positions[i] * freq;
            t.c(static_cast<Eigen::Index>(i), k) = static_cast<T>(std::cos(angle));
            t.s(static_cast<Eigen::Index>(i), k) = static_cast<T>(std::sin(angle));
        }
    }
    return t;
}

// Rotates every head block of x (s x heads*head_dim) in place. `inverse`
// applies the transposed rotation (used by the backward pass).
template <typename T>
void apply_rope(Mat<T>& x, const RopeTable<T>& t, int heads, int head_dim, bool inverse = false) {
    const int half = head_dim / 2;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (int h = 0; h < heads; ++h) {
            const int base_col = h * head_dim;
            for (int k = 0; k < half; ++k) {
                const T c = t.c(i, k);
                const T s = inverse ? -t.s(i, k) : t.s(i, k);
                const T x0 = x(i, base_col + 2 * k);
                const T x1 = x(i, base_col + 2 * k + 1);
                x(i, base_col + 2 * k) = x0 * c - x1 * s;
                x(i, base_col + 2 * k + 1) = x0 * s + x1 * c;
            }
        }
    }
}

// Standalone rotary rotation of a single head-dim vector.
template <typename T>
std::vector<T> rope_apply(const std::vector<T>& vec, int pos, double base) {
    if (vec.size() % 2 != 0) {
        throw std::invalid_argument("rope requires an even head dimension");
    }
    const int head_dim = static_cast<int>(vec.size());
    std::vector<T> out(vec.size());
    for (int k = 0; k < head_dim / 2; ++k) {
        const double angle = pos * std::pow(base, -2.0 * k / head_dim);
        const T c = static_cast<T>(std::cos(angle));
        const T s = static_cast<T>(std::sin(angle));
        out[static_cast<std::size_t>(2 * k)] = vec[static_cast<std::size_t>(2 * k)] * c -
                                               vec[static_cast<std::size_t>(2 * k + 1)] * s;
        out[static_cast<std::size_t>(2 * k + 1)] = vec[static_cast<std::size_t>(2 * k)] * s +
                                                   vec[static_cast<std::size_t>(2 * k + 1)] * c;
    }
    return out;
}

namespace detail {

// y = gain ⊙ x / rms(x), row-wise.
template <typename T>
Mat<T> rmsnorm(const Mat<T>& x, const Mat<T>& gain) {
    Mat<T> y(x.rows(), x.cols());
    const T inv_d = static_cast<T>(1) / static_cast<T>(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const T mean_sq = x.row(i).squaredNorm() * inv_d;
        const T r = static_cast<T>(1) / std::sqrt(mean_sq + static_cast<T>(kRmsEps));
        y.row(i) = x.row(i).cwiseProduct(gain.row(0)) * r;
    }
    return y;
}

// dx for y = gain ⊙ x * r; accumulates dgain when given.
template <typename T>
Mat<T> rmsnorm_backward(const Mat<T>& x, const Mat<T>& gain, const Mat<T>& dy, Mat<T>* dgain) {
    Mat<T> dx(x.rows(), x.cols());
    const T inv_d = static_cast<T>(1) / static_cast<T>(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const T mean_sq = x.row(i).squaredNorm() * inv_d;
        const T r = static_cast<T>(1) / std::sqrt(mean_sq + static_cast<T>(kRmsEps));
        if (dgain) {
            dgain->row(0) += dy.row(i).cwiseProduct(x.row(i)) * r;
        }
        const auto g_dy = dy.row(i).cwiseProduct(gain.row(0));
        const T dot = g_dy.cwiseProduct(x.row(i)).sum();
        dx.row(i) = g_dy * r - x.row(i) * (r * r * r * inv_d * dot);
    }
    return dx;
}

template <typename T>
T sigmoid(T z) {
    return static_cast<T>(1) / (static_cast<T>(1) + std::exp(-z));
}

template <typename T>
T silu(T z) {
    return z * sigmoid(z);
}

template <typename T>
T silu_grad(T z) {
    const T s = sigmoid(z);
    return s * (static_cast<T>(1) + z * (static_cast<T>(1) - s));
}

}  // namespace detail

template <typename T>
struct AdapterCache {
    std::vector<int> rows;  // special positions
    Mat<T> in;              // rows x d, hidden before the adapter
    Mat<T> u;               // rows x r (gate bottleneck)
    Mat<T> gate;            // rows x d (post-sigmoid)
    Mat<T> w;               // rows x r (value bottleneck)
    Mat<T> val;             // rows x d
};

// h <- h + sigmoid(gate_up gate_down h) ⊙ (value_up value_down h) at the
// given rows; every other row passes through untouched.
template <typename T>
void adapter_apply(Mat<T>& hidden, const std::vector<int>& special_positions,
                   const AdapterSlot<T>& slot, AdapterCache<T>* cache = nullptr) {
    const Eigen::Index k = static_cast<Eigen::Index>(special_positions.size());
    if (k == 0) {
        if (cache) {
            cache->rows.clear();
        }
        return;
    }
    Mat<T> in(k, hidden.cols());
    for (Eigen::Index i = 0; i < k; ++i) {
        in.row(i) = hidden.row(special_positions[static_cast<std::size_t>(i)]);
    }
    Mat<T> u = in * slot.gate_down.transpose();
    Mat<T> gate = (u * slot.gate_up.transpose()).unaryExpr([](T z) { return detail::sigmoid(z); });
    Mat<T> w = in * slot.value_down.transpose();
    Mat<T> val = w * slot.value_up.transpose();
    for (Eigen::Index i = 0; i < k; ++i) {
        hidden.row(special_positions[static_cast<std::size_t>(i)]) +=
            gate.row(i).cwiseProduct(val.row(i));
    }
    if (cache) {
        cache->rows = special_positions;
        cache->in = std::move(in);
        cache->u = std::move(u);
        cache->gate = std::move(gate);
        cache->w = std::move(w);
        cache->val = std::move(val);
    }
}

template <typename T>
struct LayerCache {
    Mat<T> h_in;         // s x d
    Mat<T> attn_normed;  // s x d
    Mat<T> q, k, v;      // s x d; q,k post-rotation
    Mat<T> lora_pq, lora_pk, lora_pv;  // s x rank
    std::vector<Mat<T>> probs;         // per head, s x s
    Mat<T> context;      // s x d
    Mat<T> h_mid;        // s x d, after the attention residual
    Mat<T> ffn_normed;   // s x d
    Mat<T> gate_pre, up_pre;  // s x ffn
    AdapterCache<T> adapter;
};

template <typename T>
struct ForwardCache {
    std::vector<LayerCache<T>> layers;
    Mat<T> final_in;
    Mat<T> final_normed;
};

namespace detail {

// Masked multi-head attention core: probs = softmax over visible columns of
// rope(q) rope(k)^T / sqrt(hd); context = probs * v per head. Masked entries
// are forced to the most negative finite value before the row softmax, which
// flushes their weight to exactly zero.
template <typename T>
Mat<T> masked_attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, const BitMatrix& mask,
                        int heads, int head_dim, std::vector<Mat<T>>* probs_cache) {
    const Eigen::Index s = q.rows();
    const T lowest = -std::numeric_limits<T>::max();
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(head_dim)));
    Mat<T> context(s, q.cols());
    if (probs_cache) {
        probs_cache->clear();
    }
    for (int h = 0; h < heads; ++h) {
        const auto qh = q.middleCols(h * head_dim, head_dim);
        const auto kh = k.middleCols(h * head_dim, head_dim);
        const auto vh = v.middleCols(h * head_dim, head_dim);
        Mat<T> scores = qh * kh.transpose() * scale;
        for (Eigen::Index i = 0; i < s; ++i) {
            for (Eigen::Index j = 0; j < s; ++j) {
                if (!mask.get(static_cast<int>(i), static_cast<int>(j))) {
                    scores(i, j) = lowest;
                }
            }
        }
        for (Eigen::Index i = 0; i < s; ++i) {
            const T row_max = scores.row(i).maxCoeff();
            scores.row(i) = (scores.row(i).array() - row_max).exp();
            const T denom = scores.row(i).sum();
            scores.row(i) /= denom;
        }
        context.middleCols(h * head_dim, head_dim) = scores * vh;
        if (probs_cache) {
            probs_cache->push_back(std::move(scores));
        }
    }
    return context;
}

}  // namespace detail

// One attention sublayer on already-normalized hidden states: projections
// (with optional LoRA deltas), rotary rotation, masked softmax, and the
// output projection. Exposed for the reduction and perturbation tests.
template <typename T>
Mat<T> attention_layer(const Mat<T>& hidden, const BitMatrix& mask,
                       const std::vector<int>& positions, const LayerWeights<T>& lw, int heads,
                       int head_dim, double rope_base, const LoraLayer<T>* lora = nullptr,
                       double lora_scale = 0.0) {
    if (hidden.rows() != mask.size() ||
        hidden.rows() != static_cast<Eigen::Index>(positions.size())) {
        throw std::invalid_argument("attention inputs disagree on sequence length");
    }
    for (int i = 0; i < mask.size(); ++i) {
        if (!mask.row_any(i)) {
            throw std::invalid_argument("mask row " + std::to_string(i) + " is fully masked");
        }
    }
    Mat<T> q = hidden * lw.wq;
    Mat<T> k = hidden * lw.wk;
    Mat<T> v = hidden * lw.wv;
    if (lora) {
        const T s = static_cast<T>(lora_scale);
        q += (hidden * lora->q.down.transpose()) * lora->q.up.transpose() * s;
        k += (hidden * lora->k.down.transpose()) * lora->k.up.transpose() * s;
        v += (hidden * lora->v.down.transpose()) * lora->v.up.transpose() * s;
    }
    const RopeTable<T> rope = make_rope_table<T>(positions, head_dim, rope_base);
    apply_rope(q, rope, heads, head_dim);
    apply_rope(k, rope, heads, head_dim);
    const Mat<T> context = detail::masked_attention(q, k, v, mask, heads, head_dim,
                                                    static_cast<std::vector<Mat<T>>*>(nullptr));
    return context * lw.wo;
}

// Full forward pass: embeddings, pre-norm attention/FFN blocks with residuals,
// inter-layer adapters at special positions (nag-zero), final norm, logits.
// `logit_rows` restricts the output head to the given rows (training path);
// when null, logits cover every position.
template <typename T>
Mat<T> forward(const ModelWeights<T>& w, const ModelConfig& cfg, const std::vector<int>& tokens,
               const BitMatrix& mask, const std::vector<int>& positions,
               const std::vector<int>& special_positions, ForwardCache<T>* cache = nullptr,
               const std::vector<int>* logit_rows = nullptr) {
    const Eigen::Index s = static_cast<Eigen::Index>(tokens.size());
    const int d = cfg.model_dim();
    if (mask.size() != static_cast<int>(s) || positions.size() != tokens.size()) {
        throw std::invalid_argument("forward inputs disagree on sequence length");
    }
    for (const int id : tokens) {
        if (id < 0 || id >= cfg.vocab_size) {
            throw std::invalid_argument("token id " + std::to_string(id) + " out of vocabulary");
        }
    }
    const bool use_lora = cfg.variant == Variant::nag_lora && !w.lora.empty();
    const T lora_scale = static_cast<T>(cfg.lora_alpha / cfg.lora_rank);

    Mat<T> h(s, d);
    for (Eigen::Index i = 0; i < s; ++i) {
        h.row(i) = w.embed.row(tokens[static_cast<std::size_t>(i)]);
    }
    const RopeTable<T> rope = make_rope_table<T>(positions, cfg.head_dim, cfg.rope_base);
    if (cache) {
        cache->layers.assign(static_cast<std::size_t>(cfg.layers), LayerCache<T>{});
    }

    for (int l = 0; l < cfg.layers; ++l) {
        LayerCache<T>* lc = cache ? &cache->layers[static_cast<std::size_t>(l)] : nullptr;
        const LayerWeights<T>& lw = w.layers[static_cast<std::size_t>(l)];
        if (lc) {
            lc->h_in = h;
        }
        Mat<T> a = detail::rmsnorm(h, lw.attn_norm);
        Mat<T> q = a * lw.wq;
        Mat<T> k = a * lw.wk;
        Mat<T> v = a * lw.wv;
        if (use_lora) {
            const LoraLayer<T>& ll = w.lora[static_cast<std::size_t>(l)];
            Mat<T> pq = a * ll.q.down.transpose();
            Mat<T> pk = a * ll.k.down.transpose();
            Mat<T> pv = a * ll.v.down.transpose();
            q += pq * ll.q.up.transpose() * lora_scale;
            k += pk * ll.k.up.transpose() * lora_scale;
            v += pv * ll.v.up.transpose() * lora_scale;
            if (lc) {
                lc->lora_pq = std::move(pq);
                lc->lora_pk = std::move(pk);
                lc->lora_pv = std::move(pv);
            }
        }
        apply_rope(q, rope, cfg.heads, cfg.head_dim);
        apply_rope(k, rope, cfg.heads, cfg.head_dim);
        for (int i = 0; i < mask.size(); ++i) {
            if (!mask.row_any(i)) {
                throw std::invalid_argument("mask row " + std::to_string(i) + " is fully masked");
            }
        }
        Mat<T> context = detail::masked_attention(q, k, v, mask, cfg.heads, cfg.head_dim,
                                                  lc ? &lc->probs : nullptr);
        Mat<T> h_mid = h + context * lw.wo;
        if (lc) {
            lc->attn_normed = std::move(a);
            lc->q = std::move(q);
            lc->k = std::move(k);
            lc->v = std::move(v);
            lc->context = std::move(context);
            lc->h_mid = h_mid;
        }
        Mat<T> f = detail::rmsnorm(h_mid, lw.ffn_norm);
        Mat<T> gate_pre = f * lw.w_gate;
        Mat<T> up_pre = f * lw.w_up;
        Mat<T> act = gate_pre.unaryExpr([](T z) { return detail::silu(z); }).cwiseProduct(up_pre);
        h = h_mid + act * lw.w_down;
        if (lc) {
            lc->ffn_normed = std::move(f);
            lc->gate_pre = std::move(gate_pre);
            lc->up_pre = std::move(up_pre);
        }
        if (cfg.variant == Variant::nag_zero && l + 1 < cfg.layers) {
            adapter_apply(h, special_positions, w.adapters[static_cast<std::size_t>(l)],
                          lc ? &lc->adapter : nullptr);
        }
    }

    if (cache) {
        cache->final_in = h;
    }
    Mat<T> normed = detail::rmsnorm(h, w.final_norm);
    if (cache) {
        cache->final_normed = normed;
    }
    if (logit_rows) {
        Mat<T> logits(static_cast<Eigen::Index>(logit_rows->size()), cfg.vocab_size);
        for (std::size_t i = 0; i < logit_rows->size(); ++i) {
            logits.row(static_cast<Eigen::Index>(i)) =
                normed.row((*logit_rows)[i]) * w.head;
        }
        return logits;
    }
    return normed * w.head;
}

// Mean negative log-likelihood of the answer tokens (positions answer_start
// onward, the end-of-answer token included); everything earlier is context.
template <typename T>
T answer_loss(const Mat<T>& full_logits, const std::vector<int>& tokens, int answer_start) {
    const int s = static_cast<int>(tokens.size());
    if (answer_start <= 0 || answer_start >= s) {
        throw std::invalid_argument("empty answer span");
    }
    T total = 0;
    for (int t = answer_start; t < s; ++t) {
        const auto row = full_logits.row(t - 1);
        const T row_max = row.maxCoeff();
        const T lse = std::log((row.array() - row_max).exp().sum()) + row_max;
        total += lse - row(tokens[static_cast<std::size_t>(t)]);
    }
    return total / static_cast<T>(s - answer_start);
}

// Which gradients a training variant needs.
struct GradPlan {
    bool backbone = false;
    bool embedding_full = false;
    bool embedding_special = false;
    bool adapters = false;
    bool lora = false;

    static GradPlan for_variant(Variant v) {
        GradPlan p;
        switch (v) {
            case Variant::backbone:
                p.backbone = true;
                p.embedding_full = true;
                break;
            case Variant::nag_zero:
                p.adapters = true;
                p.embedding_special = true;
                break;
            case Variant::nag_lora:
                p.lora = true;
                p.embedding_special = true;
                break;
        }
        return p;
    }

    // Everything, regardless of variant: used by the finite-difference checks.
    static GradPlan all() { return {true, true, false, true, true}; }
};

// Forward + analytic backward for one sequence. Returns the loss and
// accumulates gradients for the tensors selected by the plan into `grads`.
template <typename T>
T loss_and_backward(const ModelWeights<T>& w, const ModelConfig& cfg,
                    const std::vector<int>& tokens, const BitMatrix& mask,
                    const std::vector<int>& positions, const std::vector<int>& special_positions,
                    int answer_start, ModelWeights<T>& grads, const GradPlan& plan) {
    const int s = static_cast<int>(tokens.size());
    if (answer_start <= 0 || answer_start >= s) {
        throw std::invalid_argument("empty answer span");
    }
    ForwardCache<T> cache;
    std::vector<int> logit_rows;
    for (int t = answer_start; t < s; ++t) {
        logit_rows.push_back(t - 1);
    }
    const Mat<T> logits =
        forward(w, cfg, tokens, mask, positions, special_positions, &cache, &logit_rows);

    const int n_answer = s - answer_start;
    const T inv_n = static_cast<T>(1) / static_cast<T>(n_answer);
    T loss = 0;
    Mat<T> dlogits(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const int target = tokens[static_cast<std::size_t>(answer_start + r)];
        const auto row = logits.row(r);
        const T row_max = row.maxCoeff();
        Eigen::Array<T, 1, Eigen::Dynamic> ex = (row.array() - row_max).exp();
        const T denom = ex.sum();
        loss += (std::log(denom) + row_max - row(target)) * inv_n;
        dlogits.row(r) = (ex / denom).matrix() * inv_n;
        dlogits(r, target) -= inv_n;
    }

    const int d = cfg.model_dim();
    const bool use_lora = cfg.variant == Variant::nag_lora && !w.lora.empty();
    const T lora_scale = static_cast<T>(cfg.lora_alpha / cfg.lora_rank);
    const RopeTable<T> rope = make_rope_table<T>(positions, cfg.head_dim, cfg.rope_base);
    const T attn_scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg.head_dim)));

    // Head and final norm.
    Mat<T> d_normed = Mat<T>::Zero(s, d);
    for (std::size_t r = 0; r < logit_rows.size(); ++r) {
        d_normed.row(logit_rows[r]) += dlogits.row(static_cast<Eigen::Index>(r)) * w.head.transpose();
        if (plan.backbone) {
            grads.head += cache.final_normed.row(logit_rows[r]).transpose() *
                          dlogits.row(static_cast<Eigen::Index>(r));
        }
    }
    Mat<T> dh = detail::rmsnorm_backward(cache.final_in, w.final_norm, d_normed,
                                         plan.backbone ? &grads.final_norm : nullptr);

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const LayerWeights<T>& lw = w.layers[static_cast<std::size_t>(l)];
        LayerWeights<T>& gl = grads.layers[static_cast<std::size_t>(l)];
        const LayerCache<T>& lc = cache.layers[static_cast<std::size_t>(l)];

        // Adapter slot l sits after this layer's output.
        if (cfg.variant == Variant::nag_zero && l + 1 < cfg.layers && !lc.adapter.rows.empty()) {
            const AdapterSlot<T>& slot = w.adapters[static_cast<std::size_t>(l)];
            AdapterSlot<T>& gs = grads.adapters[static_cast<std::size_t>(l)];
            const AdapterCache<T>& ac = lc.adapter;
            const Eigen::Index kk = static_cast<Eigen::Index>(ac.rows.size());
            Mat<T> d_out(kk, d);
            for (Eigen::Index i = 0; i < kk; ++i) {
                d_out.row(i) = dh.row(ac.rows[static_cast<std::size_t>(i)]);
            }
            const Mat<T> d_gate = d_out.cwiseProduct(ac.val);
            const Mat<T> d_val = d_out.cwiseProduct(ac.gate);
            // val = w * value_up^T
            const Mat<T> d_w = d_val * slot.value_up;
            if (plan.adapters) {
                gs.value_up += d_val.transpose() * ac.w;
                gs.value_down += d_w.transpose() * ac.in;
            }
            // gate = sigmoid(u * gate_up^T)
            const Mat<T> ones = Mat<T>::Ones(kk, d);
            const Mat<T> d_z = d_gate.cwiseProduct(ac.gate).cwiseProduct(ones - ac.gate);
            const Mat<T> d_u = d_z * slot.gate_up;
            if (plan.adapters) {
                gs.gate_up += d_z.transpose() * ac.u;
                gs.gate_down += d_u.transpose() * ac.in;
            }
            const Mat<T> d_in = d_w * slot.value_down + d_u * slot.gate_down;
            for (Eigen::Index i = 0; i < kk; ++i) {
                dh.row(ac.rows[static_cast<std::size_t>(i)]) += d_in.row(i);
            }
        }

        // FFN block: h = h_mid + (silu(gate_pre) ⊙ up_pre) * w_down.
        const Mat<T> act =
            lc.gate_pre.unaryExpr([](T z) { return detail::silu(z); }).cwiseProduct(lc.up_pre);
        const Mat<T> d_act = dh * lw.w_down.transpose();
        if (plan.backbone) {
            gl.w_down += act.transpose() * dh;
        }
        const Mat<T> d_up = d_act.cwiseProduct(
            lc.gate_pre.unaryExpr([](T z) { return detail::silu(z); }));
        const Mat<T> d_gate_pre =
            d_act.cwiseProduct(lc.up_pre)
                .cwiseProduct(lc.gate_pre.unaryExpr([](T z) { return detail::silu_grad(z); }));
        Mat<T> d_f = d_gate_pre * lw.w_gate.transpose() + d_up * lw.w_up.transpose();
        if (plan.backbone) {
            gl.w_gate += lc.ffn_normed.transpose() * d_gate_pre;
            gl.w_up += lc.ffn_normed.transpose() * d_up;
        }
        Mat<T> dh_mid =
            dh + detail::rmsnorm_backward(lc.h_mid, lw.ffn_norm, d_f,
                                          plan.backbone ? &gl.ffn_norm : nullptr);

        // Attention block: h_mid = h_in + context * wo.
        const Mat<T> d_context = dh_mid * lw.wo.transpose();
        if (plan.backbone) {
            gl.wo += lc.context.transpose() * dh_mid;
        }
        Mat<T> dq = Mat<T>::Zero(s, d);
        Mat<T> dk = Mat<T>::Zero(s, d);
        Mat<T> dv = Mat<T>::Zero(s, d);
        for (int h = 0; h < cfg.heads; ++h) {
            const auto qh = lc.q.middleCols(h * cfg.head_dim, cfg.head_dim);
            const auto kh = lc.k.middleCols(h * cfg.head_dim, cfg.head_dim);
            const auto vh = lc.v.middleCols(h * cfg.head_dim, cfg.head_dim);
            const auto d_ctx_h = d_context.middleCols(h * cfg.head_dim, cfg.head_dim);
            const Mat<T>& probs = lc.probs[static_cast<std::size_t>(h)];
            Mat<T> d_probs = d_ctx_h * vh.transpose();
            dv.middleCols(h * cfg.head_dim, cfg.head_dim) = probs.transpose() * d_ctx_h;
            // softmax backward per row; masked entries have prob 0 => grad 0.
            Mat<T> d_scores(probs.rows(), probs.cols());
            for (Eigen::Index i = 0; i < probs.rows(); ++i) {
                const T dot = d_probs.row(i).cwiseProduct(probs.row(i)).sum();
                d_scores.row(i) =
                    probs.row(i).cwiseProduct(d_probs.row(i) - Mat<T>::Constant(1, probs.cols(), dot));
            }
            dq.middleCols(h * cfg.head_dim, cfg.head_dim) = d_scores * kh * attn_scale;
            dk.middleCols(h * cfg.head_dim, cfg.head_dim) =
                d_scores.transpose() * qh * attn_scale;
        }
        apply_rope(dq, rope, cfg.heads, cfg.head_dim, /*inverse=*/true);
        apply_rope(dk, rope, cfg.heads, cfg.head_dim, /*inverse=*/true);

        Mat<T> d_a = dq * lw.wq.transpose() + dk * lw.wk.transpose() + dv * lw.wv.transpose();
        if (plan.backbone) {
            gl.wq += lc.attn_normed.transpose() * dq;
            gl.wk += lc.attn_normed.transpose() * dk;
            gl.wv += lc.attn_normed.transpose() * dv;
        }
        if (use_lora) {
            const LoraLayer<T>& ll = w.lora[static_cast<std::size_t>(l)];
            LoraLayer<T>& gll = grads.lora[static_cast<std::size_t>(l)];
            struct Path {
                const Mat<T>* dout;
                const Mat<T>* p;
                const LoraPair<T>* pair;
                LoraPair<T>* gpair;
            };
            const Path paths[3] = {{&dq, &lc.lora_pq, &ll.q, &gll.q},
                                   {&dk, &lc.lora_pk, &ll.k, &gll.k},
                                   {&dv, &lc.lora_pv, &ll.v, &gll.v}};
            for (const Path& path : paths) {
                const Mat<T> d_p = (*path.dout) * path.pair->up * lora_scale;
                if (plan.lora) {
                    path.gpair->up += path.dout->transpose() * (*path.p) * lora_scale;
                    path.gpair->down += d_p.transpose() * lc.attn_normed;
                }
                d_a += d_p * path.pair->down;
            }
        }
        dh = dh_mid + detail::rmsnorm_backward(lc.h_in, lw.attn_norm, d_a,
                                               plan.backbone ? &gl.attn_norm : nullptr);
    }

    if (plan.embedding_full || plan.embedding_special) {
        for (int t = 0; t < s; ++t) {
            const int id = tokens[static_cast<std::size_t>(t)];
            if (plan.embedding_full || is_special_embedding_row(id)) {
                grads.embed.row(id) += dh.row(t);
            }
        }
    }
    return loss;
}

// Greedy decoding. The prefix sequence ends at the answer position; each
// decoded token is appended as a query continuation and the mask/positions
// are rebuilt, so decoding recomputes the full forward per step.
struct GenerateOptions {
    int max_new_tokens = 24;
};

inline std::vector<int> generate_tokens(const ModelWeights<float>& w, const ModelConfig& cfg,
                                        const TextGraph& g, FlattenedSequence seq,
                                        const GenerateOptions& opts = {}) {
    std::vector<int> out;
    for (int step = 0; step < opts.max_new_tokens; ++step) {
        const TopoMask mask =
            compose_mask(seq, g, cfg.query_mode, {cfg.query_sees_graph_hub, false});
        const PositionAssignment pos = assign_positions(seq, cfg.position_scheme);
        const std::vector<int> last_row = {seq.size() - 1};
        const Mat<float> logits = forward(w, cfg, seq.token_ids, mask.bits, pos.ids,
                                          seq.special_positions(), nullptr, &last_row);
        int best = 0;
        for (int v = 1; v < cfg.vocab_size; ++v) {
            if (logits(0, v) > logits(0, best)) {
                best = v;
            }
        }
        if (best == tok::end_of_answer) {
            break;
        }
        out.push_back(best);
        append_query_token(seq, best);
    }
    return out;
}

inline std::string generate_answer(const ModelWeights<float>& w, const ModelConfig& cfg,
                                   const Vocabulary& vocab, const TextGraph& g,
                                   const std::vector<UnifiedElement>& elements,
                                   std::string_view question, const GenerateOptions& opts = {}) {
    const FlattenedSequence seq = flatten(vocab, g, elements, question);
    return vocab.detokenize(generate_tokens(w, cfg, g, seq, opts));
}

// Checks that a hub's attention output equals the explicit neighbor
// aggregation sum_j alpha_ij * (W_V (h_j + Adapter(h_j))): the left side runs
// the model's attention machinery, the right side is a plain-loop evaluation
// of the message function, with alpha shared between both.
template <typename T>
struct MessageCheckReport {
    T max_abs_dev = 0;
    Mat<T> hub_output;  // 1 x d, the model-route aggregation at the hub
};

template <typename T>
MessageCheckReport<T> message_function_check(const Mat<T>& wq, const Mat<T>& wk, const Mat<T>& wv,
                                             const AdapterSlot<T>* adapter,
                                             const Mat<T>& hub_states,
                                             const std::vector<bool>& visible, int hub_row,
                                             const std::vector<int>& positions, double rope_base) {
    const Eigen::Index s = hub_states.rows();
    const int d = static_cast<int>(hub_states.cols());
    if (static_cast<Eigen::Index>(visible.size()) != s ||
        static_cast<Eigen::Index>(positions.size()) != s) {
        throw std::invalid_argument("message check inputs disagree on sequence length");
    }

    Mat<T> adapted = hub_states;
    if (adapter) {
        std::vector<int> all_rows(static_cast<std::size_t>(s));
        for (Eigen::Index i = 0; i < s; ++i) {
            all_rows[static_cast<std::size_t>(i)] = static_cast<int>(i);
        }
        adapter_apply(adapted, all_rows, *adapter);
    }

    // Model route: the single-head attention core over the visible set.
    BitMatrix mask(static_cast<int>(s));
    for (Eigen::Index j = 0; j < s; ++j) {
        if (visible[static_cast<std::size_t>(j)]) {
            mask.set(hub_row, static_cast<int>(j));
        }
    }
    for (Eigen::Index i = 0; i < s; ++i) {
        if (i != hub_row) {
            mask.set(static_cast<int>(i), static_cast<int>(i));
        }
    }
    Mat<T> q = adapted * wq;
    Mat<T> k = adapted * wk;
    Mat<T> v = adapted * wv;
    const RopeTable<T> rope = make_rope_table<T>(positions, d, rope_base);
    apply_rope(q, rope, 1, d);
    apply_rope(k, rope, 1, d);
    std::vector<Mat<T>> probs;
    const Mat<T> context = detail::masked_attention(q, k, v, mask, 1, d, &probs);

    // Explicit route: per-neighbor message function with shared alpha,
    // evaluated with plain loops.
    std::vector<T> out_b(static_cast<std::size_t>(d), static_cast<T>(0));
    for (Eigen::Index j = 0; j < s; ++j) {
        if (!visible[static_cast<std::size_t>(j)]) {
            continue;
        }
        const T alpha = probs[0](hub_row, j);
        // phi(h_j) = W_V^T applied to the adapted state (row-vector convention).
        for (int c = 0; c < d; ++c) {
            T phi = 0;
            for (int r = 0; r < d; ++r) {
                phi += adapted(j, r) * wv(r, c);
            }
            out_b[static_cast<std::size_t>(c)] += alpha * phi;
        }
    }

    MessageCheckReport<T> report;
    report.hub_output = context.row(hub_row);
    for (int c = 0; c < d; ++c) {
        const T dev = std::abs(context(hub_row, c) - out_b[static_cast<std::size_t>(c)]);
        report.max_abs_dev = std::max(report.max_abs_dev, dev);
    }
    return report;
}

}  // namespace nag
