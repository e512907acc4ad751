// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Action Consistency (distance of a video's mean window embedding to its class
// centroid) and Temporal Coherence (mean step length of per-frame embeddings).

#pragma once

#include "actman/clustering.hpp"
#include "actman/encoder.hpp"
#include "actman/features.hpp"
#include "actman/windows.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace actman {

struct ClassCentroids {
    std::map<std::string, Vector> centroids;
    std::map<std::string, int> counts;

    bool contains(const std::string& label) const { return centroids.count(label) > 0; }

    const Vector& at(const std::string& label) const {
        auto it = centroids.find(label);
        if (it == centroids.end()) throw ValidationError("no centroid for label '" + label + "'");
        return it->second;
    }

    int dim() const { return centroids.empty() ? 0 : static_cast<int>(centroids.begin()->second.size()); }
};

// Plain means of the window CLS embeddings per class, not re-normalized.
inline ClassCentroids compute_centroids(const std::vector<WindowEmbedding>& embeddings) {
    ClassCentroids c;
    for (const auto& e : embeddings) {
        if (!e.label) throw ValidationError("compute_centroids: window of '" + e.video_id + "' has no label");
        auto [it, inserted] = c.centroids.try_emplace(*e.label, Vector::Zero(e.cls.size()));
        if (it->second.size() != e.cls.size()) throw ValidationError("compute_centroids: dimension mismatch");
        it->second += e.cls;
        ++c.counts[*e.label];
    }
    if (c.centroids.empty()) throw ValidationError("compute_centroids: no embeddings");
    for (auto& [label, v] : c.centroids) {
        v /= static_cast<double>(c.counts[label]);
        if (v.norm() < 1e-6) warn("centroid for '" + label + "' is degenerate (near-zero norm)");
    }
    return c;
}

struct VideoEmbedding {
    std::vector<WindowEmbedding> windows;
    Vector mean_cls;
};

inline Vector mean_cls(const std::vector<WindowEmbedding>& windows) {
    if (windows.empty()) throw ValidationError("mean_cls: no windows");
    Vector m = Vector::Zero(windows.front().cls.size());
    for (const auto& w : windows) m += w.cls;
    return m / static_cast<double>(windows.size());
}

template <typename S>
VideoEmbedding embed_video(const FeatureSequence& seq, const EncoderParams<S>& p, const EncoderConfig& cfg,
                           const NormStats& norm, const WindowConfig& wcfg,
                           const std::vector<std::string>& masked = {}) {
    VideoEmbedding out;
    for (const auto& w : make_windows(seq, norm, wcfg)) out.windows.push_back(encode_window(w, p, cfg, masked));
    out.mean_cls = mean_cls(out.windows);
    return out;
}

// ||z_video - c_k||_2
inline double s_cons(const Vector& video_mean, const Vector& centroid) {
    if (video_mean.size() != centroid.size()) throw ValidationError("s_cons: dimension mismatch");
    return (video_mean - centroid).norm();
}

// (1/(T-1)) * sum_t ||z_{t+1} - z_t||_2 for one window.
inline double s_temp_window(const RowMatrix& frames) {
    const Eigen::Index T = frames.rows();
    if (T < 2) throw ValidationError("s_temp: window needs at least two frames");
    double sum = 0.0;
    for (Eigen::Index t = 0; t + 1 < T; ++t) sum += (frames.row(t + 1) - frames.row(t)).norm();
    return sum / static_cast<double>(T - 1);
}

// Uniform mean of per-window scores (padded windows included).
inline double s_temp(const std::vector<WindowEmbedding>& windows) {
    if (windows.empty()) throw ValidationError("s_temp: no windows");
    double sum = 0.0;
    for (const auto& w : windows) sum += s_temp_window(w.frames);
    return sum / static_cast<double>(windows.size());
}

struct VideoScore {
    std::string video_id;
    std::string label;
    double s_cons = 0.0;
    double s_temp = 0.0;
    int windows = 0;
};

inline VideoScore score_video(const VideoEmbedding& video, const std::string& label,
                              const ClassCentroids& centroids) {
    VideoScore s;
    s.video_id = video.windows.empty() ? std::string() : video.windows.front().video_id;
    s.label = label;
    s.s_cons = s_cons(video.mean_cls, centroids.at(label));
    s.s_temp = s_temp(video.windows);
    s.windows = static_cast<int>(video.windows.size());
    return s;
}

inline RowMatrix stack_cls(const std::vector<WindowEmbedding>& windows) {
    if (windows.empty()) return RowMatrix(0, 0);
    RowMatrix out(windows.size(), windows.front().cls.size());
    for (std::size_t i = 0; i < windows.size(); ++i) out.row(i) = windows[i].cls.transpose();
    return out;
}

inline std::vector<std::string> window_labels(const std::vector<WindowEmbedding>& windows) {
    std::vector<std::string> out;
    for (const auto& w : windows) {
        if (!w.label) throw ValidationError("window of '" + w.video_id + "' has no label");
        out.push_back(*w.label);
    }
    return out;
}

// Fraction of windows whose nearest centroid (l2) is their own class.
inline double nearest_centroid_accuracy(const std::vector<WindowEmbedding>& windows,
                                        const ClassCentroids& centroids) {
    if (windows.empty()) throw ValidationError("nearest_centroid_accuracy: no windows");
    int correct = 0;
    for (const auto& w : windows) {
        if (!w.label) throw ValidationError("window of '" + w.video_id + "' has no label");
        std::string best;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [label, c] : centroids.centroids) {
            const double d = (w.cls - c).norm();
            if (d < best_d) {
                best_d = d;
                best = label;
            }
        }
        if (best == *w.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(windows.size());
}

}  // namespace actman
