// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "actman/benchstats.hpp"
#include "actman/encoder.hpp"
#include "actman/metrics.hpp"
#include "actman/windows.hpp"

#include <optional>
#include <string>
#include <vector>

namespace actman {

struct SweepRow {
    std::string kind;  // "none" for the undistorted baseline
    double severity = 0.0;
    double mean_s_cons = 0.0;
    double mean_s_temp = 0.0;
    int windows = 0;
};

struct SweepWindowScore {
    std::string kind;
    double severity = 0.0;
    double s_cons = 0.0;
    double s_temp = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;                 // baseline first, then kind-major
    std::vector<SweepWindowScore> per_window;   // every distorted window score
};

// Window-level S_cons / S_temp of distorted test windows, averaged per
// (kind, severity). Every window uses the same distortion seed across
// severities, and severity 0 reproduces the baseline exactly.
template <typename S>
SweepResult sensitivity_sweep(const std::vector<TemporalWindow>& test_windows, const EncoderParams<S>& p,
                              const EncoderConfig& cfg, const NormStats& norm, const ClassCentroids& centroids,
                              const std::vector<DistortionKind>& kinds, const std::vector<double>& severities,
                              std::uint64_t seed = 0, const std::vector<std::string>& masked = {}) {
    if (test_windows.empty()) throw ValidationError("sensitivity_sweep: no test windows");
    for (double s : severities) {
        if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("sensitivity_sweep: severity outside [0, 1]");
    }
    auto score = [&](const TemporalWindow& w) {
        if (!w.label) throw ValidationError("sensitivity_sweep: window of '" + w.video_id + "' has no label");
        const auto e = encode_window(w, p, cfg, masked);
        return std::pair{s_cons(e.cls, centroids.at(*w.label)), s_temp_window(e.frames)};
    };
    SweepResult out;
    SweepRow base{"none", 0.0, 0.0, 0.0, static_cast<int>(test_windows.size())};
    std::vector<std::pair<double, double>> baseline;
    for (const auto& w : test_windows) {
        baseline.push_back(score(w));
        base.mean_s_cons += baseline.back().first;
        base.mean_s_temp += baseline.back().second;
    }
    base.mean_s_cons /= base.windows;
    base.mean_s_temp /= base.windows;
    out.rows.push_back(base);
    for (auto kind : kinds) {
        for (double sev : severities) {
            SweepRow row{std::string(to_string(kind)), sev, 0.0, 0.0, static_cast<int>(test_windows.size())};
            for (std::size_t i = 0; i < test_windows.size(); ++i) {
                const DistortionSpec spec{kind, sev, mix_seed(seed, i)};
                const auto sc = affected_frames(sev, test_windows[i].length()) == 0
                                    ? baseline[i]
                                    : score(distort(test_windows[i], spec, norm));
                row.mean_s_cons += sc.first;
                row.mean_s_temp += sc.second;
                out.per_window.push_back({row.kind, sev, sc.first, sc.second});
            }
            row.mean_s_cons /= row.windows;
            row.mean_s_temp /= row.windows;
            out.rows.push_back(row);
        }
    }
    return out;
}

struct SweepSensitivity {
    std::string kind;
    std::optional<double> rho_s_cons;  // Spearman(severity, mean score)
    std::optional<double> rho_s_temp;
    std::optional<double> pooled_rho_s_cons;  // Spearman over individual windows
    std::optional<double> pooled_rho_s_temp;
};

inline SweepSensitivity sweep_sensitivity(const SweepResult& r, const std::string& kind) {
    SweepSensitivity out{kind, {}, {}, {}, {}};
    std::vector<double> sev, cons, temp;
    for (const auto& row : r.rows) {
        if (row.kind != kind) continue;
        sev.push_back(row.severity);
        cons.push_back(row.mean_s_cons);
        temp.push_back(row.mean_s_temp);
    }
    if (sev.size() >= 2) {
        out.rho_s_cons = spearman(sev, cons);
        out.rho_s_temp = spearman(sev, temp);
    }
    sev.clear();
    cons.clear();
    temp.clear();
    for (const auto& w : r.per_window) {
        if (w.kind != kind) continue;
        sev.push_back(w.severity);
        cons.push_back(w.s_cons);
        temp.push_back(w.s_temp);
    }
    if (sev.size() >= 2) {
        out.pooled_rho_s_cons = spearman(sev, cons);
        out.pooled_rho_s_temp = spearman(sev, temp);
    }
    return out;
}

}  // namespace actman
