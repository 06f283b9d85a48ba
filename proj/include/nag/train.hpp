#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nag/config.hpp"
#include "nag/model.hpp"
#include "nag/rng.hpp"
#include "nag/synth.hpp"
#include "nag/vocab.hpp"
#include "nag/weights.hpp"

namespace nag {

// Strided index parallelism; each index owns its output slot, so results are
// independent of the worker count.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < n; i += threads) {
                    fn(i);
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

// Adam with linear warmup. Only tensors trainable under the config's variant
// are touched; the embedding updates are restricted to the special rows for
// the NAG variants.
class Adam {
public:
    Adam(const ModelConfig& cfg, const ModelWeights<float>& w, double lr, int warmup,
         double beta1 = 0.9, double beta2 = 0.95, double eps = 1e-8)
        : variant_(cfg.variant), lr_(lr), warmup_(warmup), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for_each_tensor(w, [this](const std::string&, const Mat<float>& m, TensorRole role) {
            const Trainability t = trainability(role, variant_);
            slots_.push_back({Mat<float>::Zero(m.rows(), m.cols()),
                              Mat<float>::Zero(m.rows(), m.cols()), t});
        });
    }

    double current_lr() const {
        const double factor =
            warmup_ > 0 ? std::min(1.0, static_cast<double>(step_ + 1) / warmup_) : 1.0;
        return lr_ * factor;
    }

    void step(ModelWeights<float>& w, const ModelWeights<float>& grads) {
        ++step_;
        const float alpha = static_cast<float>(current_lr());
        const float bc1 = 1.0f - std::pow(static_cast<float>(beta1_), static_cast<float>(step_));
        const float bc2 = 1.0f - std::pow(static_cast<float>(beta2_), static_cast<float>(step_));

        std::vector<const Mat<float>*> grad_list;
        for_each_tensor(grads, [&grad_list](const std::string&, const Mat<float>& m, TensorRole) {
            grad_list.push_back(&m);
        });
        std::size_t idx = 0;
        for_each_tensor(w, [&](const std::string&, Mat<float>& param, TensorRole) {
            Slot& slot = slots_[idx];
            const Mat<float>& g = *grad_list[idx];
            ++idx;
            if (slot.train == Trainability::frozen) {
                return;
            }
            auto update_rows = [&](Eigen::Index r0, Eigen::Index r1) {
                for (Eigen::Index r = r0; r < r1; ++r) {
                    slot.m.row(r) = static_cast<float>(beta1_) * slot.m.row(r) +
                                    (1.0f - static_cast<float>(beta1_)) * g.row(r);
                    slot.v.row(r) =
                        static_cast<float>(beta2_) * slot.v.row(r) +
                        (1.0f - static_cast<float>(beta2_)) * g.row(r).cwiseProduct(g.row(r));
                    param.row(r) -=
                        alpha * (slot.m.row(r) / bc1).array().cwiseQuotient(
                                    ((slot.v.row(r) / bc2).array().sqrt() + eps_).matrix().array())
                            .matrix();
                }
            };
            if (slot.train == Trainability::special_rows) {
                update_rows(tok::graph_open, tok::edge_close + 1);
            } else {
                update_rows(0, param.rows());
            }
        });
    }

    int steps_taken() const { return step_; }

private:
    struct Slot {
        Mat<float> m;
        Mat<float> v;
        Trainability train;
    };

    Variant variant_;
    double lr_;
    int warmup_;
    double beta1_;
    double beta2_;
    float eps_;
    std::vector<Slot> slots_;
    int step_ = 0;
};

struct TrainHyper {
    int steps = 1000;
    int batch_size = 8;
    double lr = 1e-3;
    int warmup = 100;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
    int threads = 1;
    std::uint64_t seed = 0;
    bool shuffle_elements = true;  // random element order per encounter
    int max_seq = 4096;
};

struct StepMetrics {
    int step = 0;
    double loss = 0.0;
    double lr = 0.0;
};

using StepCallback = std::function<void(const StepMetrics&, const ModelWeights<float>&)>;

// Builds the training sequence for one sample encounter.
inline FlattenedSequence training_sequence(const TaskSample& sample, const Vocabulary& vocab,
                                           std::uint64_t order_seed, bool shuffle_elements) {
    const ElementOrder order = shuffle_elements ? ElementOrder::random(order_seed)
                                                : ElementOrder::as_given();
    const std::vector<UnifiedElement> elements = unified_elements(sample.graph, order);
    return flatten(vocab, sample.graph, elements, sample.question, sample.answer);
}

struct TrainResult {
    ModelWeights<float> weights;
    std::vector<StepMetrics> metrics;
};

// Deterministic training loop: per-sample gradients are computed in parallel
// into private buffers and reduced in batch order, so loss curves are
// byte-identical for any --threads value.
inline TrainResult train(const ModelConfig& cfg, const Vocabulary& vocab,
                         const std::vector<TaskSample>& data, const TrainHyper& hyper,
                         const StepCallback& on_step = nullptr,
                         const ModelWeights<float>* init = nullptr) {
    cfg.validate();
    if (data.empty()) {
        throw std::invalid_argument("training dataset is empty");
    }
    TrainResult result;
    result.weights = init ? *init : init_weights<float>(cfg, derive_seed(hyper.seed, 1));
    Adam adam(cfg, result.weights, hyper.lr, hyper.warmup, hyper.beta1, hyper.beta2,
              hyper.adam_eps);
    const GradPlan plan = GradPlan::for_variant(cfg.variant);

    const int n = static_cast<int>(data.size());
    std::vector<int> epoch_order(static_cast<std::size_t>(n));
    int epoch_cached = -1;
    auto order_at = [&](long long counter) {
        const int epoch = static_cast<int>(counter / n);
        if (epoch != epoch_cached) {
            for (int i = 0; i < n; ++i) {
                epoch_order[static_cast<std::size_t>(i)] = i;
            }
            Rng rng(derive_seed(hyper.seed, 2, static_cast<std::uint64_t>(epoch)));
            rng.shuffle(epoch_order);
            epoch_cached = epoch;
        }
        return epoch_order[static_cast<std::size_t>(counter % n)];
    };

    std::vector<ModelWeights<float>> slot_grads;
    std::vector<double> slot_loss(static_cast<std::size_t>(hyper.batch_size), 0.0);
    for (int b = 0; b < hyper.batch_size; ++b) {
        slot_grads.push_back(zeros_like(result.weights));
    }
    ModelWeights<float> total = zeros_like(result.weights);

    for (int step = 0; step < hyper.steps; ++step) {
        // Sample indices must be resolved sequentially (the epoch shuffle is
        // stateful); the heavy per-sample work runs in parallel afterwards.
        std::vector<int> batch_samples(static_cast<std::size_t>(hyper.batch_size));
        std::vector<std::uint64_t> batch_order_seeds(static_cast<std::size_t>(hyper.batch_size));
        for (int b = 0; b < hyper.batch_size; ++b) {
            const long long counter =
                static_cast<long long>(step) * hyper.batch_size + b;
            batch_samples[static_cast<std::size_t>(b)] = order_at(counter);
            batch_order_seeds[static_cast<std::size_t>(b)] =
                derive_seed(hyper.seed, 3, static_cast<std::uint64_t>(counter));
        }
        parallel_for(hyper.batch_size, hyper.threads, [&](int b) {
            const TaskSample& sample = data[static_cast<std::size_t>(
                batch_samples[static_cast<std::size_t>(b)])];
            const FlattenedSequence seq =
                training_sequence(sample, vocab, batch_order_seeds[static_cast<std::size_t>(b)],
                                  hyper.shuffle_elements);
            if (seq.size() > hyper.max_seq) {
                throw std::runtime_error("sample " + sample.id + " exceeds max_seq (" +
                                         std::to_string(seq.size()) + " tokens)");
            }
            const TopoMask mask =
                compose_mask(seq, sample.graph, cfg.query_mode, {cfg.query_sees_graph_hub, false});
            const PositionAssignment pos = assign_positions(seq, cfg.position_scheme);
            set_zero(slot_grads[static_cast<std::size_t>(b)]);
            slot_loss[static_cast<std::size_t>(b)] = static_cast<double>(loss_and_backward(
                result.weights, cfg, seq.token_ids, mask.bits, pos.ids, seq.special_positions(),
                seq.answer_start, slot_grads[static_cast<std::size_t>(b)], plan));
        });

        set_zero(total);
        double loss = 0.0;
        for (int b = 0; b < hyper.batch_size; ++b) {
            accumulate(total, slot_grads[static_cast<std::size_t>(b)]);
            loss += slot_loss[static_cast<std::size_t>(b)];
        }
        loss /= hyper.batch_size;
        if (!std::isfinite(loss)) {
            throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                                     "; try lowering the learning rate");
        }
        scale(total, 1.0f / static_cast<float>(hyper.batch_size));

        const StepMetrics metrics{step, loss, adam.current_lr()};
        adam.step(result.weights, total);
        result.metrics.push_back(metrics);
        if (on_step) {
            on_step(metrics, result.weights);
        }
    }
    return result;
}

// Copies the backbone tensors (embeddings, layers, final norm, head) from a
// source model, keeping the target's adapter/LoRA tensors.
inline void adopt_backbone(ModelWeights<float>& target, const ModelWeights<float>& source) {
    target.embed = source.embed;
    if (target.layers.size() != source.layers.size()) {
        throw std::invalid_argument("backbone layer count mismatch");
    }
    target.layers = source.layers;
    target.final_norm = source.final_norm;
    target.head = source.head;
}

}  // namespace nag
