// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Property checks shared by the unit tests and the acceptance runner.

#pragma once

#include "actman/encoder.hpp"
#include "actman/training.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace actman::testing {

struct GradCheckReport {
    std::map<std::string, double> rel_error;  // per parameter tensor
    std::string worst_name;
    double worst = 0.0;
};

// Central finite differences of the batch objective against the analytic gradient
// on a tiny double-precision encoder. Tensors whose analytic and numeric gradients
// both vanish count as exact.
inline GradCheckReport gradient_check(std::uint64_t seed, int batch = 6, int T = 4, double eps = 1e-5) {
    const EncoderConfig cfg = tiny_config(8, 2, 2);
    std::mt19937_64 rng(seed);
    auto params = init_params<double>(cfg);
    std::normal_distribution<double> jitter(0.0, 0.05);
    visit_params(params, cfg, [&](const std::string&, Mat<double>& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += jitter(rng);
    });

    const int width = cfg.input_width();
    std::vector<EncoderInput<double>> clean, distorted;
    std::vector<int> labels, positives, owner;
    for (int i = 0; i < batch; ++i) {
        clean.push_back({random_matrix(T, width, rng), random_matrix(T, width, rng)});
        labels.push_back(i / 2);
        positives.push_back(i % 2 == 0 ? i + 1 : i - 1);
        EncoderInput<double> d = clean.back();
        d.static_in = d.static_in.colwise().reverse().eval();
        d.motion_in = d.motion_in.colwise().reverse().eval();
        distorted.push_back(d);
        owner.push_back(i);
    }
    TrainConfig tc;
    tc.lambda = 2.0;
    tc.temperature = 0.5;

    auto grads = zeros_like(params, cfg);
    batch_loss(params, cfg, clean, labels, positives, distorted, owner, tc, &grads);
    auto objective = [&] { return batch_loss(params, cfg, clean, labels, positives, distorted, owner, tc).total; };

    std::map<std::string, Mat<double>*> analytic;
    visit_params(grads, cfg, [&](const std::string& name, Mat<double>& m) { analytic[name] = &m; });

    GradCheckReport report;
    visit_params(params, cfg, [&](const std::string& name, Mat<double>& m) {
        const Mat<double>& g = *analytic.at(name);
        Mat<double> numeric(m.rows(), m.cols());
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double keep = m.data()[i];
            m.data()[i] = keep + eps;
            const double up = objective();
            m.data()[i] = keep - eps;
            const double down = objective();
            m.data()[i] = keep;
            numeric.data()[i] = (up - down) / (2.0 * eps);
        }
        const double scale = std::max(g.norm(), numeric.norm());
        const double err = scale < 1e-9 ? 0.0 : (g - numeric).norm() / scale;
        report.rel_error[name] = err;
        if (err >= report.worst) {
            report.worst = err;
            report.worst_name = name;
        }
    });
    return report;
}

struct EmbeddingContractReport {
    int windows = 0;
    double max_norm_error = 0.0;      // | ||z|| - 1 | over CLS and frame rows
    double max_simplex_error = 0.0;   // | sum alpha - 1 | and negativity
    bool deterministic = true;
    int permutation_insensitive = 0;  // windows whose CLS barely moved under a frame permutation
};

inline EmbeddingContractReport embedding_contracts(int count, std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.d_model = 32;
    cfg.num_heads = 4;
    cfg.num_layers = 2;
    cfg.window = 16;
    cfg.seed = seed;
    const auto params = init_params<float>(cfg);
    std::mt19937_64 rng(seed);
    const int width = kFrameDim;
    EmbeddingContractReport r;
    for (int i = 0; i < count; ++i) {
        TemporalWindow w;
        w.static_features = random_matrix(cfg.window, width, rng);
        w.motion = random_matrix(cfg.window, width, rng);
        w.raw = w.static_features;
        w.video_id = "w" + std::to_string(i);
        const auto a = encode_window(w, params, cfg);
        const auto b = encode_window(w, params, cfg);
        r.deterministic = r.deterministic && a.cls == b.cls && a.frames == b.frames && a.attention == b.attention;
        r.max_norm_error = std::max(r.max_norm_error, std::abs(a.cls.norm() - 1.0));
        for (Eigen::Index t = 0; t < a.frames.rows(); ++t) {
            r.max_norm_error = std::max(r.max_norm_error, std::abs(a.frames.row(t).norm() - 1.0));
        }
        for (Eigen::Index t = 0; t < a.attention.rows(); ++t) {
            r.max_simplex_error = std::max(r.max_simplex_error, std::abs(a.attention.row(t).sum() - 1.0));
            r.max_simplex_error = std::max(r.max_simplex_error, -a.attention.row(t).minCoeff());
        }
        // permute the fused frame sequence fed to the aggregator
        Mat<float> f = random_matrix(cfg.window, cfg.d_model, rng).cast<float>();
        std::vector<int> order(cfg.window);
        std::iota(order.begin(), order.end(), 0);
        while (std::is_sorted(order.begin(), order.end())) std::shuffle(order.begin(), order.end(), rng);
        Mat<float> fp(f.rows(), f.cols());
        for (int t = 0; t < cfg.window; ++t) fp.row(t) = f.row(order[t]);
        const Mat<float> z1 = aggregate(f, params, cfg);
        const Mat<float> z2 = aggregate(fp, params, cfg);
        if (z1.row(0).dot(z2.row(0)) >= 1.0f - 1e-4f) ++r.permutation_insensitive;
        ++r.windows;
    }
    return r;
}

}  // namespace actman::testing
