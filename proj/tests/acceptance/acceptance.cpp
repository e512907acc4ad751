// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: actman_acceptance [path/to/desk.json]

#include "actman/benchstats.hpp"
#include "actman/cli.hpp"
#include "actman/losses.hpp"
#include "actman/metrics.hpp"
#include "actman/sweep.hpp"
#include "actman/synthdata.hpp"
#include "actman/training.hpp"

#include "../checks.hpp"
#include "../stat_oracles.hpp"
#include "../test_util.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

using namespace actman;
using namespace actman::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Clock {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string num(double v, int prec = 4) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : "undefined"; }

bool report(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    Clock clock;
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double t = clock.seconds();
    if (t > budget_s) {
        o.pass = false;
        o.detail += "; over the " + num(budget_s) + " s budget";
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << num(t, 3) << " s): " << o.detail << std::endl;
    return o.pass;
}

// ---- statistics ------------------------------------------------------------------

Outcome statistics_oracles() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 60);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) x[i] = g(rng), y[i] = g(rng);
        worst = std::max(worst, std::abs(*spearman(x, y) - spearman_rank_formula(x, y)));
    }
    bool ok = worst < 1e-12;

    // BT.500 on a crafted table plus random tables
    std::vector<std::vector<double>> crafted(5, std::vector<double>(12, 5.0));
    for (int v = 0; v < 12; ++v) crafted[4][v] = v % 2 ? 0.0 : 10.0;
    int bt_mismatch = 0;
    auto compare_bt = [&](const std::vector<std::vector<double>>& dense) {
        const auto t = table_from_dense(dense);
        const auto got = bt500(t, t.all_raters());
        const auto want = bt500_oracle(dense);
        for (std::size_t r = 0; r < dense.size(); ++r) {
            const auto& a = got.raters[r];
            bt_mismatch += a.p != want[r].p || a.q != want[r].q || a.n != want[r].n || a.rejected != want[r].rejected;
        }
    };
    compare_bt(crafted);
    const bool crafted_ok = bt500_reject(table_from_dense(crafted)) == std::vector<int>{0, 1, 2, 3};
    std::uniform_int_distribution<int> score(0, 10);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::vector<double>> dense(4 + rng() % 12, std::vector<double>(12));
        for (auto& row : dense)
            for (auto& s : row) s = score(rng);
        compare_bt(dense);
    }
    ok = ok && crafted_ok && bt_mismatch == 0;

    // win ratio against pair enumeration
    int wr_mismatch = 0;
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::vector<double>> s(2 + rng() % 4, std::vector<double>(1 + rng() % 5));
        for (auto& row : s)
            for (auto& v : row) v = score(rng);
        const auto got = win_ratio(s);
        const auto want = win_ratio_oracle(s);
        for (std::size_t i = 0; i < s.size(); ++i) wr_mismatch += *got[i] != want[i];
    }
    ok = ok && wr_mismatch == 0;

    // MOS z-scores: {2, 4, 6} against the population-sigma oracle
    const auto mos = mos_zscore(table_from_dense({{2, 4, 6}}), {0});
    const double sigma = pop_std({2, 4, 6});
    const bool mos_ok = mos.size() == 3 && mos[0].z == (2.0 - 4.0) / sigma && mos[1].z == 0.0 &&
                        mos[2].z == (6.0 - 4.0) / sigma;
    ok = ok && mos_ok;

    // convergence: cumulative population std
    const auto curve = convergence_curve(table_from_dense({{4}, {6}, {8}, {6}}), {"v100"});
    const bool conv_ok = curve[0].stds == std::vector<double>{pop_std({4, 6}), pop_std({4, 6, 8}), pop_std({4, 6, 8, 6})};
    ok = ok && conv_ok;

    std::ostringstream d;
    d << "spearman max |delta| " << num(worst) << " over 200 vectors; bt500 mismatches " << bt_mismatch
      << (crafted_ok ? ", outlier rater rejected" : ", crafted outlier NOT rejected") << "; win_ratio mismatches "
      << wr_mismatch << "; mos " << (mos_ok ? "exact" : "mismatch") << "; convergence "
      << (conv_ok ? "exact" : "mismatch");
    return {ok, d.str()};
}

// ---- encoder contracts -----------------------------------------------------------------

Outcome gradient_correctness() {
    const auto r = gradient_check(17);
    return {r.worst < 1e-4, "worst relative error " + num(r.worst) + " (" + r.worst_name + ") over " +
                                std::to_string(r.rel_error.size()) + " parameter tensors"};
}

Outcome embedding_contracts_1000() {
    const auto r = embedding_contracts(1000, 99);
    const bool ok = r.windows == 1000 && r.max_norm_error <= 1e-5 && r.max_simplex_error <= 1e-6 && r.deterministic &&
                    r.permutation_insensitive == 0;
    return {ok, "max | ||z|| - 1 | " + num(r.max_norm_error) + ", max simplex error " + num(r.max_simplex_error) +
                    ", deterministic " + (r.deterministic ? "yes" : "no") + ", permutation-insensitive windows " +
                    std::to_string(r.permutation_insensitive)};
}

// ---- windowing ------------------------------------------------------------------------

Outcome windowing_properties() {
    const auto seq = random_sequence(90, 31);
    const RowMatrix frames = flatten_frames(seq);
    const auto norm = identity_norm();
    std::mt19937_64 rng(8);
    int configs = 0, violations = 0;
    std::string first;
    auto fail = [&](const std::string& what) {
        if (violations++ == 0) first = what;
    };
    for (int trial = 0; trial < 250; ++trial) {
        const int L = 1 + static_cast<int>(rng() % 90);
        const int T = 1 + static_cast<int>(rng() % 40);
        const int overlap = static_cast<int>(rng() % T);
        const WindowConfig cfg{T, overlap};
        FeatureSequence sub = seq;
        sub.frames.resize(L);
        const auto windows = make_windows(sub, norm, cfg);
        ++configs;
        const std::string tag = "L=" + std::to_string(L) + " T=" + std::to_string(T) + " overlap=" + std::to_string(overlap);
        if (windows.empty() || windows[0].start_frame != 0) fail(tag + ": first window not at 0");
        std::vector<int> covered(L, 0);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const auto& w = windows[i];
            if (i > 0 && w.start_frame - windows[i - 1].start_frame != T - overlap) fail(tag + ": stride");
            if (i + 1 < windows.size() && w.start_frame + T >= L) fail(tag + ": window after the end was reached");
            if (w.length() != T) fail(tag + ": window length");
            if (w.pad_count != std::max(0, w.start_frame + T - L)) fail(tag + ": pad count");
            for (int t = 0; t < T; ++t) {
                const int src = std::min(w.start_frame + t, L - 1);
                if (w.source_frames[t] != src || w.raw.row(t) != frames.row(src)) fail(tag + ": row content");
                if (w.start_frame + t < L) ++covered[w.start_frame + t];
            }
        }
        if (windows.back().start_frame + T < L) fail(tag + ": tail not covered");
        for (int f = 0; f < L; ++f)
            if (covered[f] == 0) fail(tag + ": frame " + std::to_string(f) + " uncovered");
        if (L < T && (windows.size() != 1 || windows[0].pad_count != T - L)) fail(tag + ": short video rule");
    }
    return {violations == 0, std::to_string(configs) + " random configurations, " + std::to_string(violations) +
                                 " violations" + (first.empty() ? "" : " (first: " + first + ")")};
}

// ---- trivial identities ------------------------------------------------------------------

Outcome trivial_identities() {
    const RowMatrix constant = RowMatrix::Constant(10, 4, 0.5);
    const bool temp_zero = s_temp_window(constant) == 0.0;

    // one video is the only contributor to its class centroid
    EncoderConfig cfg;
    cfg.d_model = 16;
    cfg.num_heads = 2;
    cfg.num_layers = 1;
    cfg.window = 8;
    const auto p = init_params<float>(cfg);
    auto seq = random_sequence(20, 4, "solo", "only");
    const auto video = embed_video(seq, p, cfg, identity_norm(), WindowConfig{8, 2});
    const auto centroids = compute_centroids(video.windows);
    const double sole = s_cons(video.mean_cls, centroids.at("only"));

    // lambda = 0: the objective is the supervised contrastive term alone
    std::mt19937_64 rng(6);
    const auto tiny = tiny_config();
    const auto tp = init_params<double>(tiny);
    std::vector<EncoderInput<double>> clean, distorted;
    std::vector<int> labels{0, 0, 1, 1}, positives{1, 0, 3, 2}, owner{0, 1, 2, 3};
    RowMatrix z(4, tiny.d_model);
    for (int i = 0; i < 4; ++i) {
        clean.push_back({random_matrix(4, 5, rng), random_matrix(4, 5, rng)});
        distorted.push_back({random_matrix(4, 5, rng), random_matrix(4, 5, rng)});
        z.row(i) = encoder_forward(tp, tiny, clean[i].static_in, clean[i].motion_in).z.row(0);
    }
    TrainConfig tc;
    tc.lambda = 0.0;
    const double total = batch_loss(tp, tiny, clean, labels, positives, distorted, owner, tc).total;
    const double supcon = supcon_loss(z, labels, tc.temperature).value;
    const bool lambda_ok = total == supcon && total_loss(supcon, 0.37, 0.0) == supcon;

    const bool ok = temp_zero && sole == 0.0 && lambda_ok;
    return {ok, "s_temp(constant) = " + num(s_temp_window(constant)) + ", s_cons(sole video) = " + num(sole) +
                    ", lambda=0 total - supcon = " + num(total - supcon)};
}

// ---- desk-scale training ------------------------------------------------------------------

struct Desk {
    cli::RunConfig cfg;
    NormStats norm;
    std::vector<TemporalWindow> train_w, test_w;
};

Desk load_desk(const std::string& config_path) {
    Desk d;
    cli::apply_config_json(d.cfg, read_json(config_path));
    d.cfg.encoder.window = d.cfg.window.length;
    const auto split = split_by_class(generate_dataset(d.cfg.synth.data), d.cfg.synth.test_fraction);
    d.norm = fit_normalization(split.train);
    d.train_w = make_windows(split.train, d.norm, d.cfg.window);
    d.test_w = make_windows(split.test, d.norm, d.cfg.window);
    return d;
}

struct Trained {
    EncoderParams<float> params;
    ClassCentroids centroids;
    double nmi = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;
};

Trained train_desk(const Desk& d, const TrainConfig& tc) {
    Clock clock;
    TrainConfig quiet = tc;
    quiet.validate_each_epoch = false;
    Trained t;
    t.params = train<float>(d.train_w, d.test_w, d.cfg.encoder, quiet, d.norm).params;
    t.centroids = compute_centroids(encode_windows(d.train_w, t.params, d.cfg.encoder));
    const auto test = encode_windows(d.test_w, t.params, d.cfg.encoder);
    t.nmi = nmi_eval(stack_cls(test), window_labels(test), static_cast<int>(t.centroids.centroids.size()), 0);
    t.accuracy = nearest_centroid_accuracy(test, t.centroids);
    t.seconds = clock.seconds();
    return t;
}

SweepResult desk_sweep(const Desk& d, const Trained& t) {
    return sensitivity_sweep(d.test_w, t.params, d.cfg.encoder, d.norm, t.centroids,
                             {DistortionKind::shuffle, DistortionKind::reverse, DistortionKind::copy},
                             {0.0, 0.25, 0.5, 0.75, 1.0}, d.cfg.sweep.seed);
}

std::string means(const SweepResult& r, const std::string& kind, bool temporal) {
    std::string out;
    for (const auto& row : r.rows) {
        if (row.kind != kind) continue;
        out += (out.empty() ? "" : " ") + num(temporal ? row.mean_s_temp : row.mean_s_cons, 3);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    warnings_enabled() = false;
    const std::string desk_config = argc > 1 ? argv[1] : ACTMAN_DESK_CONFIG;
    int failures = 0;

    failures += !report("statistics-oracles", 10, statistics_oracles);
    failures += !report("gradient-correctness", 60, gradient_correctness);
    failures += !report("embedding-contracts", 60, embedding_contracts_1000);
    failures += !report("windowing-properties", 10, windowing_properties);
    failures += !report("trivial-identities", 10, trivial_identities);

    Desk desk;
    Trained full;
    std::optional<SweepResult> full_sweep;
    failures += !report("synthetic-separability", 15 * 60, [&] {
        desk = load_desk(desk_config);
        full = train_desk(desk, desk.cfg.training);
        const bool ok = full.nmi >= 0.90 && full.accuracy >= 0.90;
        return Outcome{ok, "held-out NMI " + num(full.nmi) + ", nearest-centroid accuracy " + num(full.accuracy) +
                               " on " + std::to_string(desk.test_w.size()) + " windows (" +
                               std::to_string(desk.cfg.training.epochs) + " epochs, " + num(full.seconds, 3) + " s)"};
    });

    failures += !report("distortion-sensitivity", 2 * 60, [&] {
        if (desk.train_w.empty()) return Outcome{false, "no trained desk model"};
        full_sweep = desk_sweep(desk, full);
        bool ok = true;
        std::string d;
        for (const char* kind : {"shuffle", "reverse"}) {
            const auto s = sweep_sensitivity(*full_sweep, kind);
            const bool k_ok = s.rho_s_cons.value_or(-1) >= 0.9 && s.rho_s_temp.value_or(-1) >= 0.9;
            ok = ok && k_ok;
            d += std::string(kind) + " rho(S_cons) " + num(s.rho_s_cons) + " [" + means(*full_sweep, kind, false) +
                 "], rho(S_temp) " + num(s.rho_s_temp) + " [" + means(*full_sweep, kind, true) + "]; ";
        }
        const double base = full_sweep->rows.front().mean_s_temp;
        double copy_full = std::numeric_limits<double>::quiet_NaN();
        for (const auto& row : full_sweep->rows)
            if (row.kind == "copy" && row.severity == 1.0) copy_full = row.mean_s_temp;
        const bool copy_ok = copy_full <= base;
        ok = ok && copy_ok;
        d += "copy@1.0 S_temp " + num(copy_full) + " vs undistorted " + num(base);
        return Outcome{ok, d};
    });

    failures += !report("loss-ablation", 30 * 60, [&] {
        if (!full_sweep) return Outcome{false, "no full-objective sweep"};
        TrainConfig no_supcon = desk.cfg.training;
        no_supcon.supcon_weight = 0.0;
        const auto a = train_desk(desk, no_supcon);
        TrainConfig no_hard = desk.cfg.training;
        no_hard.lambda = 0.0;
        const auto b = train_desk(desk, no_hard);
        const auto full_s = sweep_sensitivity(*full_sweep, "shuffle");
        const auto nohn_s = sweep_sensitivity(desk_sweep(desk, b), "shuffle");
        const double drop = full.nmi - a.nmi;
        const bool nmi_ok = drop >= 0.15;
        const bool hn_ok = nohn_s.rho_s_temp.value_or(-1) < full_s.rho_s_temp.value_or(-1);
        return Outcome{nmi_ok && hn_ok,
                       "NMI full " + num(full.nmi) + " vs without supcon " + num(a.nmi) + " (drop " + num(drop) +
                           ", need >= 0.15); shuffle rho(S_temp) full " + num(full_s.rho_s_temp) +
                           " vs without hard negatives " + num(nohn_s.rho_s_temp) + " (rho(S_cons) " +
                           num(full_s.rho_s_cons) + " vs " + num(nohn_s.rho_s_cons) + ")"};
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
