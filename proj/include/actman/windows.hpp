// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "actman/common.hpp"
#include "actman/features.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace actman {

// T consecutive frames. `raw` keeps the unnormalized static rows so that motion
// can be re-derived after padding or distortion.
struct TemporalWindow {
    RowMatrix raw;              // T x kFrameDim
    RowMatrix static_features;  // T x kFrameDim, normalized
    RowMatrix motion;           // T x kFrameDim, normalized
    std::vector<int> source_frames;  // frame index in the source video for every row
    std::string video_id;
    int start_frame = 0;
    int pad_count = 0;
    std::optional<std::string> label;

    int length() const { return static_cast<int>(raw.rows()); }
};

struct WindowConfig {
    int length = 32;
    int overlap = 8;

    int stride() const { return length - overlap; }

    void validate() const {
        if (length < 1) throw ValidationError("window length must be >= 1");
        if (overlap < 0 || overlap >= length) {
            throw ValidationError("window overlap must satisfy 0 <= overlap < length (got overlap " +
                                  std::to_string(overlap) + ", length " + std::to_string(length) + ")");
        }
    }
};

// Rebuilds normalized static and motion matrices from `raw`.
inline void refresh_window(TemporalWindow& w, const NormStats& norm) {
    w.static_features = norm.normalize_static(w.raw);
    w.motion = norm.normalize_motion(derive_motion_rows(w.raw));
}

// Window start positions: 0, s, 2s, ... up to the first window that reaches the
// end of the video.
inline std::vector<int> window_starts(int num_frames, const WindowConfig& cfg) {
    cfg.validate();
    if (num_frames < 1) throw ValidationError("window_starts: empty sequence");
    std::vector<int> starts{0};
    const int s = cfg.stride();
    while (starts.back() + cfg.length < num_frames) starts.push_back(starts.back() + s);
    return starts;
}

inline std::vector<TemporalWindow> make_windows(const FeatureSequence& seq, const NormStats& norm,
                                                const WindowConfig& cfg) {
    const auto starts = window_starts(seq.length(), cfg);
    const RowMatrix frames = flatten_frames(seq);
    const int L = seq.length();
    std::vector<TemporalWindow> out;
    out.reserve(starts.size());
    for (int start : starts) {
        TemporalWindow w;
        w.video_id = seq.video_id;
        w.label = seq.label;
        w.start_frame = start;
        w.raw.resize(cfg.length, kFrameDim);
        w.source_frames.resize(cfg.length);
        for (int t = 0; t < cfg.length; ++t) {
            const int src = std::min(start + t, L - 1);
            w.source_frames[t] = src;
            w.raw.row(t) = frames.row(src);
        }
        w.pad_count = std::max(0, start + cfg.length - L);
        refresh_window(w, norm);
        out.push_back(std::move(w));
    }
    return out;
}

inline std::vector<TemporalWindow> make_windows(const std::vector<FeatureSequence>& seqs, const NormStats& norm,
                                                const WindowConfig& cfg) {
    std::vector<TemporalWindow> out;
    for (const auto& s : seqs) {
        auto w = make_windows(s, norm, cfg);
        std::move(w.begin(), w.end(), std::back_inserter(out));
    }
    return out;
}

enum class DistortionKind { shuffle, reverse, copy };

inline std::string_view to_string(DistortionKind k) {
    switch (k) {
        case DistortionKind::shuffle: return "shuffle";
        case DistortionKind::reverse: return "reverse";
        case DistortionKind::copy: return "copy";
    }
    return "unknown";
}

inline DistortionKind parse_distortion_kind(std::string_view s) {
    if (s == "shuffle") return DistortionKind::shuffle;
    if (s == "reverse") return DistortionKind::reverse;
    if (s == "copy") return DistortionKind::copy;
    throw ValidationError("unknown distortion kind '" + std::string(s) + "'");
}

struct DistortionSpec {
    DistortionKind kind = DistortionKind::shuffle;
    double severity = 0.0;
    std::uint64_t rng_seed = 0;
};

// Number of affected frames, ceil(severity * T) with severity clamped to [0, 1].
inline int affected_frames(double severity, int length) {
    const double s = std::clamp(severity, 0.0, 1.0);
    // the epsilon keeps products such as 0.3 * 10 from rounding up
    const int n = static_cast<int>(std::ceil(s * length - 1e-9));
    return std::clamp(n, 0, length);
}

// Row permutation (or repetition) applied by a distortion; row t of the result
// is row order[t] of the input.
inline std::vector<int> distortion_order(int length, const DistortionSpec& spec) {
    std::vector<int> order(length);
    std::iota(order.begin(), order.end(), 0);
    const int n = affected_frames(spec.severity, length);
    if (n == 0) return order;
    std::mt19937_64 rng(spec.rng_seed);
    switch (spec.kind) {
        case DistortionKind::shuffle: {
            std::vector<int> all(order);
            std::shuffle(all.begin(), all.end(), rng);
            std::vector<int> chosen(all.begin(), all.begin() + n);
            std::sort(chosen.begin(), chosen.end());
            std::vector<int> perm(chosen);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (int i = 0; i < n; ++i) order[chosen[i]] = perm[i];
            break;
        }
        case DistortionKind::reverse: {
            std::uniform_int_distribution<int> pick(0, length - n);
            const int start = pick(rng);
            std::reverse(order.begin() + start, order.begin() + start + n);
            break;
        }
        case DistortionKind::copy: {
            std::fill(order.begin(), order.begin() + n, 0);
            break;
        }
    }
    return order;
}

inline TemporalWindow distort(const TemporalWindow& window, const DistortionSpec& spec,
                              const NormStats& norm) {
    const int T = window.length();
    const auto order = distortion_order(T, spec);
    TemporalWindow out = window;
    bool changed = false;
    for (int t = 0; t < T; ++t) {
        if (order[t] != t) {
            changed = true;
            out.raw.row(t) = window.raw.row(order[t]);
            out.source_frames[t] = window.source_frames[order[t]];
        }
    }
    if (changed) refresh_window(out, norm);
    return out;
}

}  // namespace actman
