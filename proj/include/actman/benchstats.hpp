// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Subjective-study statistics: rater screening (repeat consistency, BT.500,
// inter-rater agreement), MOS z-scoring, win ratios, convergence curves.

#pragma once

#include "actman/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace actman {

// ---- rank statistics --------------------------------------------------------

// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Spearman's rho: Pearson correlation of average ranks. Empty when either
// input is constant.
inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("spearman: inputs differ in length");
    if (x.size() < 2) throw ValidationError("spearman: need at least two observations");
    return pearson(average_ranks(x), average_ranks(y));
}

// Linear-interpolation percentile (q in [0, 100]) of a non-empty sample.
inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw ValidationError("percentile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double population_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double population_std(const std::vector<double>& v) {
    const double m = population_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// ---- rater table --------------------------------------------------------------

struct RaterTable {
    std::vector<std::string> raters;
    std::vector<std::string> videos;
    std::vector<std::string> duplicate_group;  // per video; empty when unique
    std::vector<std::string> model;            // per video, optional metadata
    std::vector<std::string> prompt;
    std::vector<std::map<int, double>> scores;  // per rater: video index -> score

    int num_raters() const { return static_cast<int>(raters.size()); }
    int num_videos() const { return static_cast<int>(videos.size()); }

    int rater_index(const std::string& id) {
        auto it = std::find(raters.begin(), raters.end(), id);
        if (it != raters.end()) return static_cast<int>(it - raters.begin());
        raters.push_back(id);
        scores.emplace_back();
        return num_raters() - 1;
    }

    int video_index(const std::string& id) {
        auto it = std::find(videos.begin(), videos.end(), id);
        if (it != videos.end()) return static_cast<int>(it - videos.begin());
        videos.push_back(id);
        duplicate_group.emplace_back();
        model.emplace_back();
        prompt.emplace_back();
        return num_videos() - 1;
    }

    int find_video(const std::string& id) const {
        auto it = std::find(videos.begin(), videos.end(), id);
        return it == videos.end() ? -1 : static_cast<int>(it - videos.begin());
    }

    void add(const std::string& rater, const std::string& video, double score) {
        if (!(score >= 0.0 && score <= 10.0)) {
            throw ValidationError("score " + std::to_string(score) + " by rater '" + rater + "' outside [0, 10]");
        }
        const int r = rater_index(rater);
        const int v = video_index(video);
        if (!scores[r].emplace(v, score).second) {
            throw ValidationError("rater '" + rater + "' rated video '" + video + "' twice");
        }
    }

    void set_duplicate_group(const std::string& video, const std::string& group) {
        duplicate_group[video_index(video)] = group;
    }

    std::vector<int> all_raters() const {
        std::vector<int> out(raters.size());
        std::iota(out.begin(), out.end(), 0);
        return out;
    }

    void validate() const {
        for (int r = 0; r < num_raters(); ++r) {
            if (scores[r].empty()) throw ValidationError("rater '" + raters[r] + "' rated no videos");
        }
    }
};

// CSV with header rater_id,video_id,axis,score,is_duplicate_group[,model,prompt].
// The duplicate column holds a group identifier (empty for unique stimuli).
// When `axis` is non-empty only rows for that axis are kept.
inline RaterTable read_rater_csv(const std::string& path, const std::string& axis = "") {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open ratings file " + path);
    auto split = [](const std::string& line) {
        std::vector<std::string> cols;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cols.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        cols.push_back(cur);
        return cols;
    };
    std::string line;
    if (!std::getline(is, line)) throw ValidationError(path + ": empty ratings file");
    const auto header = split(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* required : {"rater_id", "video_id", "axis", "score", "is_duplicate_group"}) {
        if (!col.count(required)) throw ValidationError(path + ": missing column '" + required + "'");
    }
    RaterTable t;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto c = split(line);
        if (c.size() != header.size()) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(header.size()) + " columns");
        }
        if (!axis.empty() && c[col["axis"]] != axis) continue;
        double score = 0.0;
        try {
            std::size_t used = 0;
            score = std::stod(c[col["score"]], &used);
            if (used != c[col["score"]].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": bad score '" + c[col["score"]] + "'");
        }
        const auto& video = c[col["video_id"]];
        t.add(c[col["rater_id"]], video, score);
        const int v = t.video_index(video);
        if (!c[col["is_duplicate_group"]].empty()) t.duplicate_group[v] = c[col["is_duplicate_group"]];
        if (col.count("model")) t.model[v] = c[col["model"]];
        if (col.count("prompt")) t.prompt[v] = c[col["prompt"]];
    }
    t.validate();
    return t;
}

// ---- stage 1: repeat consistency ----------------------------------------------

struct RepeatConsistency {
    std::vector<std::optional<double>> value;  // per rater; empty when no duplicates were seen
    double threshold = 0.0;
    std::vector<int> retained;
};

// Mean over duplicate groups (with >= 2 instances rated by the rater) of the
// population std of that rater's scores; cut at the 95th percentile.
inline RepeatConsistency repeat_consistency(const RaterTable& t, const std::vector<int>& candidates) {
    RepeatConsistency out;
    out.value.assign(t.num_raters(), std::nullopt);
    std::vector<double> observed;
    for (int r : candidates) {
        std::map<std::string, std::vector<double>> groups;
        for (const auto& [v, s] : t.scores[r]) {
            if (!t.duplicate_group[v].empty()) groups[t.duplicate_group[v]].push_back(s);
        }
        double sum = 0.0;
        int n = 0;
        for (const auto& [_, g] : groups) {
            if (g.size() < 2) continue;
            sum += population_std(g);
            ++n;
        }
        if (n > 0) {
            out.value[r] = sum / n;
            observed.push_back(sum / n);
        }
    }
    out.threshold = observed.empty() ? 0.0 : percentile(observed, 95.0);
    for (int r : candidates) {
        if (!out.value[r] || *out.value[r] <= out.threshold) out.retained.push_back(r);
    }
    return out;
}

inline std::vector<int> repeat_consistency_filter(const RaterTable& t, const std::vector<int>& candidates) {
    return repeat_consistency(t, candidates).retained;
}

inline std::vector<int> repeat_consistency_filter(const RaterTable& t) {
    return repeat_consistency_filter(t, t.all_raters());
}

// ---- stage 2: BT.500 ------------------------------------------------------------

struct Bt500Rater {
    int p = 0;  // scores above mean + threshold
    int q = 0;  // scores below mean - threshold
    int n = 0;  // videos rated
    double r1 = 0.0;
    double r2 = 0.0;
    bool rejected = false;
};

struct Bt500Result {
    std::vector<Bt500Rater> raters;  // indexed by rater; untouched for non-candidates
    std::vector<int> retained;
};

// Per-video population mean / std / kurtosis over the candidate raters; the
// outlier threshold is 2S for 2 <= beta2 <= 4, else sqrt(20) S. Scores on or
// beyond the threshold count.
inline Bt500Result bt500(const RaterTable& t, const std::vector<int>& candidates) {
    if (candidates.size() < 2) throw ValidationError("bt500_reject: need at least two raters");
    std::vector<std::vector<double>> per_video(t.num_videos());
    for (int r : candidates)
        for (const auto& [v, s] : t.scores[r]) per_video[v].push_back(s);
    std::vector<double> mean(t.num_videos(), 0.0), thr(t.num_videos(), 0.0);
    for (int v = 0; v < t.num_videos(); ++v) {
        const auto& x = per_video[v];
        if (x.empty()) continue;
        const double m = population_mean(x);
        double m2 = 0.0, m4 = 0.0;
        for (double s : x) {
            const double d = s - m;
            m2 += d * d;
            m4 += d * d * d * d;
        }
        m2 /= static_cast<double>(x.size());
        m4 /= static_cast<double>(x.size());
        const double beta2 = m2 > 0.0 ? m4 / (m2 * m2) : 3.0;
        const double sd = std::sqrt(m2);
        mean[v] = m;
        thr[v] = (beta2 >= 2.0 && beta2 <= 4.0) ? 2.0 * sd : std::sqrt(20.0) * sd;
    }
    Bt500Result out;
    out.raters.resize(t.num_raters());
    for (int r : candidates) {
        auto& s = out.raters[r];
        for (const auto& [v, score] : t.scores[r]) {
            if (thr[v] <= 0.0) continue;  // unanimous video: nobody is an outlier
            if (score >= mean[v] + thr[v]) ++s.p;
            if (score <= mean[v] - thr[v]) ++s.q;
        }
        s.n = static_cast<int>(t.scores[r].size());
        s.r1 = s.n > 0 ? static_cast<double>(s.p + s.q) / s.n : 0.0;
        s.r2 = (s.p + s.q) > 0 ? std::abs(static_cast<double>(s.p - s.q)) / (s.p + s.q) : 0.0;
        s.rejected = (s.r1 > 0.05 && s.r2 < 0.3) || s.n < 10;
        if (!s.rejected) out.retained.push_back(r);
    }
    return out;
}

inline std::vector<int> bt500_reject(const RaterTable& t, const std::vector<int>& candidates) {
    return bt500(t, candidates).retained;
}

inline std::vector<int> bt500_reject(const RaterTable& t) { return bt500_reject(t, t.all_raters()); }

// ---- stage 3: inter-rater agreement ----------------------------------------------

struct InterRaterResult {
    std::vector<std::optional<double>> rho;  // per rater
    std::vector<int> retained;
};

// Single pass: each candidate is compared with the mean of all other
// candidates on the videos they share. Fewer than two shared videos or an
// undefined rho drops the rater.
inline InterRaterResult interrater(const RaterTable& t, const std::vector<int>& candidates, double threshold = 0.55) {
    if (candidates.size() < 3) throw ValidationError("interrater_filter: need at least three raters");
    InterRaterResult out;
    out.rho.assign(t.num_raters(), std::nullopt);
    for (int r : candidates) {
        std::vector<double> mine, others;
        for (const auto& [v, s] : t.scores[r]) {
            double sum = 0.0;
            int n = 0;
            for (int o : candidates) {
                if (o == r) continue;
                auto it = t.scores[o].find(v);
                if (it != t.scores[o].end()) {
                    sum += it->second;
                    ++n;
                }
            }
            if (n == 0) continue;
            mine.push_back(s);
            others.push_back(sum / n);
        }
        if (mine.size() < 2) continue;
        out.rho[r] = spearman(mine, others);
        if (out.rho[r] && *out.rho[r] >= threshold) out.retained.push_back(r);
    }
    return out;
}

inline std::vector<int> interrater_filter(const RaterTable& t, const std::vector<int>& candidates,
                                          double threshold = 0.55) {
    return interrater(t, candidates, threshold).retained;
}

inline std::vector<int> interrater_filter(const RaterTable& t, double threshold = 0.55) {
    return interrater_filter(t, t.all_raters(), threshold);
}

// ---- MOS ----------------------------------------------------------------------------

struct MosEntry {
    std::string video_id;
    double mos = 0.0;
    double z = 0.0;
    int ratings = 0;
};

// Mean over retained raters per video, then z = (MOS - mu) / sigma across
// videos with population sigma (all zero when sigma = 0).
inline std::vector<MosEntry> mos_zscore(const RaterTable& t, const std::vector<int>& retained) {
    std::vector<MosEntry> out;
    for (int v = 0; v < t.num_videos(); ++v) {
        double sum = 0.0;
        int n = 0;
        for (int r : retained) {
            auto it = t.scores[r].find(v);
            if (it != t.scores[r].end()) {
                sum += it->second;
                ++n;
            }
        }
        if (n == 0) {
            warn("video '" + t.videos[v] + "' has no retained ratings; excluded from MOS");
            continue;
        }
        out.push_back({t.videos[v], sum / n, 0.0, n});
    }
    if (out.empty()) return out;
    std::vector<double> mos;
    for (const auto& e : out) mos.push_back(e.mos);
    const double mu = population_mean(mos);
    const double sigma = population_std(mos);
    for (auto& e : out) e.z = sigma > 0.0 ? (e.mos - mu) / sigma : 0.0;
    return out;
}

// ---- win ratio ------------------------------------------------------------------------

// scores[m][p] is model m's score on prompt p (NaN when missing). For each
// prompt and unordered pair with both scores, the higher score wins and ties
// give 0.5 to each. Empty for models that entered no comparison.
inline std::vector<std::optional<double>> win_ratio(const std::vector<std::vector<double>>& scores) {
    const std::size_t m = scores.size();
    if (m < 2) throw ValidationError("win_ratio: need at least two models");
    const std::size_t prompts = scores.front().size();
    for (const auto& row : scores) {
        if (row.size() != prompts) throw ValidationError("win_ratio: ragged score matrix");
    }
    std::vector<double> wins(m, 0.0), games(m, 0.0);
    for (std::size_t p = 0; p < prompts; ++p) {
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a + 1; b < m; ++b) {
                const double sa = scores[a][p], sb = scores[b][p];
                if (std::isnan(sa) || std::isnan(sb)) continue;
                games[a] += 1.0;
                games[b] += 1.0;
                if (sa > sb) {
                    wins[a] += 1.0;
                } else if (sb > sa) {
                    wins[b] += 1.0;
                } else {
                    wins[a] += 0.5;
                    wins[b] += 0.5;
                }
            }
        }
    }
    std::vector<std::optional<double>> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (games[i] > 0.0) out[i] = wins[i] / games[i];
    }
    return out;
}

// ---- convergence -----------------------------------------------------------------------

struct ConvergenceCurve {
    std::string video_id;
    std::vector<double> stds;  // entry i is the std of the first i + 2 scores
};

// Raters ordered by id; population std of the first n scores for n = 2..N.
inline std::vector<ConvergenceCurve> convergence_curve(const RaterTable& t, const std::vector<std::string>& video_ids) {
    std::vector<int> order(t.num_raters());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return t.raters[a] < t.raters[b]; });
    std::vector<ConvergenceCurve> out;
    for (const auto& vid : video_ids) {
        const int v = t.find_video(vid);
        if (v < 0) throw ValidationError("convergence_curve: unknown video '" + vid + "'");
        std::vector<double> seq;
        for (int r : order) {
            auto s = t.scores[r].find(v);
            if (s != t.scores[r].end()) seq.push_back(s->second);
        }
        if (seq.size() < 2) throw ValidationError("convergence_curve: video '" + vid + "' has fewer than two raters");
        ConvergenceCurve c{vid, {}};
        for (std::size_t n = 2; n <= seq.size(); ++n) {
            c.stds.push_back(population_std(std::vector<double>(seq.begin(), seq.begin() + static_cast<long>(n))));
        }
        out.push_back(std::move(c));
    }
    return out;
}

// ---- full pipeline ----------------------------------------------------------------------

struct StudyResult {
    std::vector<int> after_repeat;
    std::vector<int> after_bt500;
    std::vector<int> after_interrater;
    int rejected_repeat = 0;
    int rejected_bt500 = 0;
    int rejected_interrater = 0;
    std::vector<MosEntry> mos;
};

// repeat consistency -> BT.500 -> inter-rater -> MOS z-scores, each stage
// filtering the previous one's survivors.
inline StudyResult run_study(const RaterTable& t, double interrater_threshold = 0.55) {
    t.validate();
    StudyResult s;
    const auto all = t.all_raters();
    s.after_repeat = repeat_consistency_filter(t, all);
    // stages that need more raters than remain are skipped, not failed
    if (s.after_repeat.size() >= 2) {
        s.after_bt500 = bt500_reject(t, s.after_repeat);
    } else {
        warn("fewer than two raters left; BT.500 screening skipped");
        s.after_bt500 = s.after_repeat;
    }
    if (s.after_bt500.size() >= 3) {
        s.after_interrater = interrater_filter(t, s.after_bt500, interrater_threshold);
    } else {
        warn("fewer than three raters left; inter-rater filter skipped");
        s.after_interrater = s.after_bt500;
    }
    s.rejected_repeat = static_cast<int>(all.size() - s.after_repeat.size());
    s.rejected_bt500 = static_cast<int>(s.after_repeat.size() - s.after_bt500.size());
    s.rejected_interrater = static_cast<int>(s.after_bt500.size() - s.after_interrater.size());
    s.mos = mos_zscore(t, s.after_interrater);
    return s;
}

}  // namespace actman
