// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "actman/clustering.hpp"
#include "actman/encoder.hpp"
#include "actman/losses.hpp"
#include "actman/metrics.hpp"
#include "actman/windows.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace actman {

struct TrainConfig {
    double learning_rate = 3e-4;
    double weight_decay = 1e-4;
    int batch_size = 32;
    int epochs = 30;
    double lambda = 10.0;
    double temperature = 0.07;
    // Weight of the supervised contrastive term; 0 drops it (loss ablation).
    double supcon_weight = 1.0;
    double severity_min = 0.3;
    double severity_max = 1.0;
    int distorted_per_anchor = 1;
    std::vector<std::string> masked_groups;
    std::uint64_t seed = 0;
    std::string schedule = "cosine";  // or "constant"
    bool validate_each_epoch = true;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
        if (weight_decay < 0.0) throw ValidationError("weight_decay must be non-negative");
        if (batch_size < 2) throw ValidationError("batch_size must be at least 2");
        if (epochs < 1) throw ValidationError("epochs must be at least 1");
        if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
        if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
        if (supcon_weight < 0.0) throw ValidationError("supcon_weight must be non-negative");
        if (severity_min < 0.0 || severity_max > 1.0 || severity_min > severity_max) {
            throw ValidationError("severity range must lie within [0, 1]");
        }
        if (distorted_per_anchor < 0) throw ValidationError("distorted_per_anchor must be non-negative");
        if (schedule != "cosine" && schedule != "constant") {
            throw ValidationError("unknown schedule '" + schedule + "'");
        }
    }
};

struct EpochRecord {
    int epoch = 0;
    double total = 0.0;
    double supcon = 0.0;
    double hard_negative = 0.0;
    double learning_rate = 0.0;
    std::optional<double> val_nmi;
};

using TrainHistory = std::vector<EpochRecord>;

// eta_t = eta_0 * 0.5 * (1 + cos(pi * t / t_max)), annealed per step to 0.
inline double cosine_lr(double base, long step, long total_steps) {
    if (total_steps <= 0) return base;
    const double frac = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
    return base * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

// Adam with decoupled weight decay.
template <typename S>
class AdamW {
public:
    AdamW(const EncoderParams<S>& like, const EncoderConfig& cfg, double weight_decay, double beta1 = 0.9,
          double beta2 = 0.999, double eps = 1e-8)
        : cfg_(cfg), m_(zeros_like(like, cfg)), v_(zeros_like(like, cfg)), weight_decay_(weight_decay),
          beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(EncoderParams<S>& params, EncoderParams<S>& grads, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        auto p = param_list(params, cfg_);
        auto g = param_list(grads, cfg_);
        auto m = param_list(m_, cfg_);
        auto v = param_list(v_, cfg_);
        const S b1 = S(beta1_), b2 = S(beta2_);
        const S step_size = S(lr / bc1);
        const S inv_sqrt_bc2 = S(1.0 / std::sqrt(bc2));
        const S decay = S(1.0 - lr * weight_decay_);
        const S eps = S(eps_);
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto pa = p[i]->array();
            auto ga = g[i]->array();
            auto ma = m[i]->array();
            auto va = v[i]->array();
            ma = b1 * ma + (S(1) - b1) * ga;
            va = b2 * va + (S(1) - b2) * ga.square();
            pa *= decay;
            pa -= step_size * ma / (va.sqrt() * inv_sqrt_bc2 + eps);
        }
    }

    long steps() const { return t_; }

private:
    EncoderConfig cfg_;
    EncoderParams<S> m_;
    EncoderParams<S> v_;
    double weight_decay_;
    double beta1_, beta2_, eps_;
    long t_ = 0;
};

template <typename S>
struct EncoderInput {
    Mat<S> static_in;
    Mat<S> motion_in;
};

template <typename S>
EncoderInput<S> make_encoder_input(const TemporalWindow& w, const EncoderConfig& cfg,
                                   const std::vector<std::string>& masked) {
    return {encoder_input<S>(w.static_features, cfg, masked), encoder_input<S>(w.motion, cfg, masked)};
}

struct BatchTerms {
    double total = 0.0;
    double supcon = 0.0;
    double hard_negative = 0.0;
};

// Encodes clean and distorted windows, evaluates
//   supcon_weight * L_supcon + lambda * L_hard-negative
// on the CLS embeddings, and (when `grads` is given) accumulates its gradient.
template <typename S>
BatchTerms batch_loss(const EncoderParams<S>& p, const EncoderConfig& cfg, const std::vector<EncoderInput<S>>& clean,
                      const std::vector<int>& labels, const std::vector<int>& positives,
                      const std::vector<EncoderInput<S>>& distorted, const std::vector<int>& owner,
                      const TrainConfig& tc, EncoderParams<S>* grads = nullptr) {
    const int n = static_cast<int>(clean.size());
    const int m = static_cast<int>(distorted.size());
    const int d = cfg.d_model;
    std::vector<EncoderCache<S>> caches(grads ? n + m : 0);
    std::vector<Eigen::Index> rows(n + m);
    RowMatrix zc(n, d), zd(m, d);
    for (int i = 0; i < n + m; ++i) {
        const auto& in = i < n ? clean[i] : distorted[i - n];
        const auto out = encoder_forward(p, cfg, in.static_in, in.motion_in, grads ? &caches[i] : nullptr);
        rows[i] = out.z.rows();
        if (i < n) {
            zc.row(i) = out.z.row(0).template cast<double>();
        } else {
            zd.row(i - n) = out.z.row(0).template cast<double>();
        }
    }
    BatchTerms terms;
    RowMatrix gc = RowMatrix::Zero(n, d);
    RowMatrix gd = RowMatrix::Zero(m, d);
    if (tc.supcon_weight > 0.0) {
        const auto sc = supcon_loss(zc, labels, tc.temperature);
        terms.supcon = sc.value;
        gc += tc.supcon_weight * sc.grad;
    }
    if (tc.lambda > 0.0) {
        const auto hn = hard_negative_loss(zc, positives, zd, owner, tc.temperature);
        terms.hard_negative = hn.value;
        gc += tc.lambda * hn.grad_clean;
        gd += tc.lambda * hn.grad_distorted;
    }
    terms.total = tc.supcon_weight * terms.supcon + tc.lambda * terms.hard_negative;
    if (grads) {
        for (int i = 0; i < n + m; ++i) {
            Mat<S> dz = Mat<S>::Zero(rows[i], d);
            dz.row(0) = (i < n ? gc.row(i) : gd.row(i - n)).template cast<S>();
            encoder_backward(p, cfg, caches[i], dz, *grads);
        }
    }
    return terms;
}

template <typename S>
struct TrainResult {
    EncoderParams<S> params;
    TrainHistory history;
};

inline std::vector<int> class_indices(const std::vector<TemporalWindow>& windows,
                                      std::vector<std::string>* names = nullptr) {
    std::vector<std::string> labels;
    for (const auto& w : windows) {
        if (!w.label) throw ValidationError("training window of '" + w.video_id + "' has no label");
        labels.push_back(*w.label);
    }
    return encode_labels(labels, names);
}

template <typename S>
std::vector<WindowEmbedding> encode_windows(const std::vector<TemporalWindow>& windows, const EncoderParams<S>& p,
                                            const EncoderConfig& cfg, const std::vector<std::string>& masked = {}) {
    std::vector<WindowEmbedding> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(encode_window(w, p, cfg, masked));
    return out;
}

// Held-out clustering quality: K-means with K = number of distinct labels.
template <typename S>
double validation_nmi(const std::vector<TemporalWindow>& windows, const EncoderParams<S>& p,
                      const EncoderConfig& cfg, const std::vector<std::string>& masked, std::uint64_t seed) {
    const auto emb = encode_windows(windows, p, cfg, masked);
    const auto labels = window_labels(emb);
    const int k = static_cast<int>(std::set<std::string>(labels.begin(), labels.end()).size());
    return nmi_eval(stack_cls(emb), labels, k, seed);
}

template <typename S = float>
TrainResult<S> train(const std::vector<TemporalWindow>& train_windows, const std::vector<TemporalWindow>& val_windows,
                     const EncoderConfig& cfg, const TrainConfig& tc, const NormStats& norm,
                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    cfg.validate();
    tc.validate();
    for (const auto& g : tc.masked_groups) cfg.group_index(g);
    std::vector<std::string> class_names;
    const auto labels = class_indices(train_windows, &class_names);
    if (class_names.size() < 2) throw ValidationError("training needs at least two classes");

    TrainResult<S> result;
    result.params = init_params<S>(cfg);
    AdamW<S> opt(result.params, cfg, tc.weight_decay);
    std::mt19937_64 rng(tc.seed);

    std::vector<EncoderInput<S>> inputs;
    inputs.reserve(train_windows.size());
    for (const auto& w : train_windows) inputs.push_back(make_encoder_input<S>(w, cfg, tc.masked_groups));

    const int n = static_cast<int>(train_windows.size());
    const int steps_per_epoch = (n + tc.batch_size - 1) / tc.batch_size;
    const long total_steps = static_cast<long>(steps_per_epoch) * tc.epochs;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::uniform_int_distribution<int> pick_kind(0, 2);
    std::uniform_real_distribution<double> pick_severity(tc.severity_min, tc.severity_max);

    long step = 0;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord rec;
        rec.epoch = epoch + 1;
        int batches = 0;
        for (int b0 = 0; b0 < n; b0 += tc.batch_size) {
            const int b1 = std::min(n, b0 + tc.batch_size);
            if (b1 - b0 < 2) continue;
            std::vector<EncoderInput<S>> clean, distorted;
            std::vector<int> batch_labels, owner;
            for (int i = b0; i < b1; ++i) {
                const int idx = order[i];
                clean.push_back(inputs[idx]);
                batch_labels.push_back(labels[idx]);
                for (int r = 0; r < tc.distorted_per_anchor && tc.lambda > 0.0; ++r) {
                    DistortionSpec spec;
                    spec.kind = static_cast<DistortionKind>(pick_kind(rng));
                    spec.severity = pick_severity(rng);
                    spec.rng_seed = rng();
                    distorted.push_back(
                        make_encoder_input<S>(distort(train_windows[idx], spec, norm), cfg, tc.masked_groups));
                    owner.push_back(i - b0);
                }
            }
            const auto positives = choose_positives(batch_labels, rng);
            const double lr = tc.schedule == "cosine" ? cosine_lr(tc.learning_rate, step, total_steps)
                                                      : tc.learning_rate;
            EncoderParams<S> grads = zeros_like(result.params, cfg);
            const auto terms = batch_loss(result.params, cfg, clean, batch_labels, positives, distorted, owner, tc, &grads);
            opt.step(result.params, grads, lr);
            rec.total += terms.total;
            rec.supcon += terms.supcon;
            rec.hard_negative += terms.hard_negative;
            rec.learning_rate = lr;
            ++batches;
            ++step;
        }
        if (batches > 0) {
            rec.total /= batches;
            rec.supcon /= batches;
            rec.hard_negative /= batches;
        }
        if (!all_finite(result.params, cfg)) {
            throw ValidationError("training diverged (non-finite parameters) in epoch " + std::to_string(epoch + 1));
        }
        if (tc.validate_each_epoch && !val_windows.empty()) {
            rec.val_nmi = validation_nmi(val_windows, result.params, cfg, tc.masked_groups, tc.seed);
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return result;
}

struct RankedWindow {
    std::size_t index = 0;  // position in the candidate list
    double distance = 0.0;
};

// Ranks candidates by ||z_cls - c_label|| ascending (ties by video id, then
// start frame) and keeps the first ceil(keep_fraction * N).
inline std::vector<RankedWindow> active_sample(const std::vector<WindowEmbedding>& candidates,
                                               const ClassCentroids& centroids, double keep_fraction) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
        throw ValidationError("keep_fraction must lie in (0, 1]");
    }
    std::vector<RankedWindow> ranked;
    ranked.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!c.label) throw ValidationError("candidate window of '" + c.video_id + "' has no label");
        ranked.push_back({i, (c.cls - centroids.at(*c.label)).norm()});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [&](const RankedWindow& a, const RankedWindow& b) {
        const auto& wa = candidates[a.index];
        const auto& wb = candidates[b.index];
        return std::tie(a.distance, wa.video_id, wa.start_frame) < std::tie(b.distance, wb.video_id, wb.start_frame);
    });
    const auto keep = static_cast<std::size_t>(
        std::ceil(keep_fraction * static_cast<double>(candidates.size()) - 1e-9));
    ranked.resize(std::min(keep, ranked.size()));
    return ranked;
}

template <typename S>
std::vector<RankedWindow> active_sample(const std::vector<TemporalWindow>& candidates, const EncoderParams<S>& p,
                                        const EncoderConfig& cfg, const ClassCentroids& centroids,
                                        double keep_fraction) {
    return active_sample(encode_windows(candidates, p, cfg), centroids, keep_fraction);
}

}  // namespace actman
