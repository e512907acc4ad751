// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. `dispatch` returns 0 on success, 1 on validation
// errors (bad flags, bad data, unknown keys) and 2 on I/O errors.

#pragma once

#include "actman/benchstats.hpp"
#include "actman/checkpoint.hpp"
#include "actman/io.hpp"
#include "actman/report.hpp"
#include "actman/sweep.hpp"
#include "actman/synthdata.hpp"
#include "actman/training.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace actman::cli {

inline constexpr const char* kOutputRootEnv = "ACTMAN_OUTPUT_ROOT";

struct SweepSettings {
    std::vector<std::string> kinds{"shuffle", "reverse", "copy"};
    std::vector<double> severities{0.0, 0.1, 0.25, 0.5, 0.75, 1.0};
    std::uint64_t seed = 0;
};

struct SynthSettings {
    SynthConfig data;
    double test_fraction = 0.2;
};

// Fully resolved configuration: defaults, then the config file, then --seed,
// then --set overrides.
struct RunConfig {
    std::string subcommand;
    std::string config_path;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;

    SynthSettings synth;
    EncoderConfig encoder;
    WindowConfig window;
    TrainConfig training;
    SweepSettings sweep;
    double keep_fraction = 0.2;
};

inline json config_json(const RunConfig& c) {
    return json{{"synth",
                 {{"classes", c.synth.data.classes},
                  {"videos_per_class", c.synth.data.videos_per_class},
                  {"frames", c.synth.data.frames},
                  {"fps", c.synth.data.fps},
                  {"seed", c.synth.data.seed},
                  {"test_fraction", c.synth.test_fraction}}},
                {"encoder", to_json(c.encoder)},
                {"window", to_json(c.window)},
                {"training", to_json(c.training)},
                {"sweep", {{"kinds", c.sweep.kinds}, {"severities", c.sweep.severities}, {"seed", c.sweep.seed}}},
                {"active_sample", {{"keep_fraction", c.keep_fraction}}}};
}

inline void apply_config_json(RunConfig& c, const json& j) {
    detail::reject_unknown(j, {"synth", "encoder", "window", "training", "sweep", "active_sample"}, "<root>");
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        detail::reject_unknown(s, {"classes", "videos_per_class", "frames", "fps", "seed", "test_fraction"}, "synth");
        detail::read_opt(s, "classes", c.synth.data.classes, "synth");
        detail::read_opt(s, "videos_per_class", c.synth.data.videos_per_class, "synth");
        detail::read_opt(s, "frames", c.synth.data.frames, "synth");
        detail::read_opt(s, "fps", c.synth.data.fps, "synth");
        detail::read_opt(s, "seed", c.synth.data.seed, "synth");
        detail::read_opt(s, "test_fraction", c.synth.test_fraction, "synth");
    }
    if (j.contains("encoder")) update_from_json(c.encoder, j["encoder"]);
    if (j.contains("window")) update_from_json(c.window, j["window"]);
    if (j.contains("training")) update_from_json(c.training, j["training"]);
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        detail::reject_unknown(s, {"kinds", "severities", "seed"}, "sweep");
        detail::read_opt(s, "kinds", c.sweep.kinds, "sweep");
        detail::read_opt(s, "severities", c.sweep.severities, "sweep");
        detail::read_opt(s, "seed", c.sweep.seed, "sweep");
    }
    if (j.contains("active_sample")) {
        detail::reject_unknown(j["active_sample"], {"keep_fraction"}, "active_sample");
        detail::read_opt(j["active_sample"], "keep_fraction", c.keep_fraction, "active_sample");
    }
}

// `section.key=value`; the value is parsed as JSON when possible, otherwise
// taken as a string.
inline void apply_override(RunConfig& c, const std::string& kv) {
    const auto eq = kv.find('=');
    const auto dot = kv.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ValidationError("override '" + kv + "' must look like section.key=value");
    }
    const std::string section = kv.substr(0, dot);
    const std::string key = kv.substr(dot + 1, eq - dot - 1);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    apply_config_json(c, json{{section, {{key, value}}}});
}

inline void resolve(RunConfig& c) {
    if (!c.config_path.empty()) apply_config_json(c, read_json(c.config_path));
    if (c.seed) {
        c.synth.data.seed = *c.seed;
        c.encoder.seed = *c.seed;
        c.training.seed = *c.seed;
        c.sweep.seed = *c.seed;
    }
    for (const auto& o : c.overrides) apply_override(c, o);
    c.encoder.window = c.window.length;
    c.window.validate();
    c.encoder.validate();
    c.training.validate();
}

inline fs::path output_path(const RunConfig& c) {
    if (!c.output.empty()) return c.output;
    const char* root = std::getenv(kOutputRootEnv);
    return fs::path(root && *root ? root : "actman_out") / c.subcommand;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_run_json(const RunConfig& c, const fs::path& dir, const json& inputs) {
    fs::create_directories(dir);
    json j{{"schema", "actman-run"},
           {"schema_version", kReportSchemaVersion},
           {"subcommand", c.subcommand},
           {"seed", c.seed ? json(*c.seed) : json(nullptr)},
           {"config_file", c.config_path.empty() ? json(nullptr) : json(c.config_path)},
           {"overrides", c.overrides},
           {"inputs", inputs},
           {"config", config_json(c)},
           {"timestamp", utc_timestamp()}};
    write_json(dir / "run.json", j);
}

// Directory that receives run.json: the output itself for directory outputs,
// its parent for single-file outputs.
inline fs::path run_dir_for_file(const fs::path& file) {
    return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

inline std::set<ReportFormat> parse_formats(const std::vector<std::string>& names) {
    std::set<ReportFormat> out;
    for (const auto& n : names) out.insert(parse_report_format(n));
    if (out.empty()) throw ValidationError("no report format requested");
    return out;
}

inline void require_labels(const std::vector<FeatureSequence>& seqs) {
    for (const auto& s : seqs) {
        if (!s.label) throw ValidationError("video '" + s.video_id + "' has no label");
    }
}

// ---- subcommands ----------------------------------------------------------------

struct Inputs {
    std::string features;
    std::string split;
    std::string checkpoint;
    std::string centroids;
    std::string ratings;
    std::string axis;
    std::string format = "csv";
    std::vector<std::string> formats{"csv", "json", "svg"};
    std::vector<std::string> convergence_videos;
    std::string kinds;
    std::string severities;
    std::optional<double> keep;
    double interrater_threshold = 0.55;
};

inline json inputs_json(const Inputs& in) {
    json j = json::object();
    if (!in.features.empty()) j["features"] = in.features;
    if (!in.split.empty()) j["split"] = in.split;
    if (!in.checkpoint.empty()) j["checkpoint"] = in.checkpoint;
    if (!in.centroids.empty()) j["centroids"] = in.centroids;
    if (!in.ratings.empty()) j["ratings"] = in.ratings;
    if (!in.axis.empty()) j["axis"] = in.axis;
    return j;
}

inline int run_synth(const RunConfig& c, const Inputs& in) {
    const fs::path out = output_path(c);
    const auto seqs = generate_dataset(c.synth.data);
    const auto split = split_by_class(seqs, c.synth.test_fraction);
    std::vector<IndexEntry> index;
    for (const auto* part : {&split.train, &split.test}) {
        const std::string name = part == &split.train ? "train" : "test";
        for (const auto& s : *part) {
            write_features(s, out);
            index.push_back({s.video_id + ".manifest.json", *s.label, name});
        }
    }
    write_index(out, index);
    write_run_json(c, out, inputs_json(in));
    std::cout << "wrote " << seqs.size() << " videos (" << split.train.size() << " train, " << split.test.size()
              << " test) to " << out.string() << "\n";
    return 0;
}

inline std::vector<FeatureSequence> load_or_default_split(const Inputs& in, const std::string& fallback) {
    if (in.features.empty()) throw ValidationError("--features is required");
    const std::string split = in.split.empty() && fs::exists(fs::path(in.features) / kIndexFile) ? fallback : in.split;
    return load_features(in.features, split);
}

inline int run_train(const RunConfig& c, const Inputs& in) {
    const fs::path out = output_path(c);
    if (in.features.empty()) throw ValidationError("--features is required");
    const bool indexed = fs::exists(fs::path(in.features) / kIndexFile);
    const auto train_seqs = load_features(in.features, indexed ? "train" : "");
    std::vector<FeatureSequence> val_seqs;
    if (indexed) {
        for (const auto& e : read_index(in.features)) {
            if (e.split == "test" || e.split == "val") {
                auto s = read_features(fs::path(in.features) / e.path);
                if (!e.label.empty()) s.label = e.label;
                val_seqs.push_back(std::move(s));
            }
        }
    }
    require_labels(train_seqs);
    const NormStats norm = fit_normalization(train_seqs);
    const auto train_w = make_windows(train_seqs, norm, c.window);
    const auto val_w = make_windows(val_seqs, norm, c.window);
    std::cout << "training on " << train_w.size() << " windows from " << train_seqs.size() << " videos\n";
    const auto result = train<float>(train_w, val_w, c.encoder, c.training, norm, [](const EpochRecord& r) {
        std::cout << "epoch " << r.epoch << " loss " << fmt(r.total) << " supcon " << fmt(r.supcon) << " hardneg "
                  << fmt(r.hard_negative);
        if (r.val_nmi) std::cout << " val_nmi " << fmt(*r.val_nmi);
        std::cout << std::endl;
    });
    Checkpoint ck{c.encoder, c.window, norm, c.training.masked_groups, result.params};
    save_checkpoint(ck, out);
    const auto emb = encode_windows(train_w, result.params, c.encoder, c.training.masked_groups);
    write_json(out / "centroids.json", to_json(compute_centroids(emb)));
    write_text(out / "history.csv", history_csv(result.history));
    write_run_json(c, out, inputs_json(in));
    return 0;
}

inline std::vector<WindowEmbedding> embed_all(const Checkpoint& ck, const std::vector<FeatureSequence>& seqs) {
    std::vector<WindowEmbedding> out;
    for (const auto& s : seqs) {
        auto v = embed_video(s, ck.params, ck.encoder, ck.norm, ck.window, ck.masked_groups);
        std::move(v.windows.begin(), v.windows.end(), std::back_inserter(out));
    }
    return out;
}

inline int run_embed(const RunConfig& c, const Inputs& in) {
    const fs::path out = output_path(c);
    const auto ck = load_checkpoint(in.checkpoint);
    const auto seqs = load_or_default_split(in, "");
    fs::create_directories(out);
    std::ostringstream win, vid;
    const int d = ck.encoder.d_model;
    win << "video_id,start_frame,label";
    vid << "video_id,label,n_windows";
    for (int i = 0; i < d; ++i) {
        win << ",z" << i;
        vid << ",z" << i;
    }
    win << '\n';
    vid << '\n';
    for (const auto& s : seqs) {
        const auto v = embed_video(s, ck.params, ck.encoder, ck.norm, ck.window, ck.masked_groups);
        for (const auto& w : v.windows) {
            win << w.video_id << ',' << w.start_frame << ',' << w.label.value_or("");
            for (int i = 0; i < d; ++i) win << ',' << fmt(w.cls(i));
            win << '\n';
        }
        vid << s.video_id << ',' << s.label.value_or("") << ',' << v.windows.size();
        for (int i = 0; i < d; ++i) vid << ',' << fmt(v.mean_cls(i));
        vid << '\n';
    }
    write_text(out / "window_embeddings.csv", win.str());
    write_text(out / "video_embeddings.csv", vid.str());
    write_run_json(c, out, inputs_json(in));
    return 0;
}

inline int run_centroids(const RunConfig& c, const Inputs& in) {
    const fs::path out = c.output.empty() ? output_path(c) / "centroids.json" : fs::path(c.output);
    const auto ck = load_checkpoint(in.checkpoint);
    const auto seqs = load_or_default_split(in, "train");
    require_labels(seqs);
    const auto centroids = compute_centroids(embed_all(ck, seqs));
    fs::create_directories(run_dir_for_file(out));
    write_json(out, to_json(centroids));
    write_run_json(c, run_dir_for_file(out), inputs_json(in));
    return 0;
}

inline ClassCentroids load_centroids(const std::string& path) {
    if (path.empty()) throw ValidationError("--centroids is required");
    return centroids_from_json(read_json(path));
}

inline int run_score(const RunConfig& c, const Inputs& in) {
    const fs::path out = c.output.empty() ? output_path(c) / ("scores." + in.format) : fs::path(c.output);
    const auto fmt_kind = parse_report_format(in.format);
    if (fmt_kind == ReportFormat::svg) throw ValidationError("score reports support csv or json only");
    const auto ck = load_checkpoint(in.checkpoint);
    const auto centroids = load_centroids(in.centroids);
    if (centroids.dim() != ck.encoder.d_model) throw ValidationError("centroid dimension does not match the checkpoint");
    const auto seqs = load_or_default_split(in, "test");
    require_labels(seqs);
    for (const auto& s : seqs) centroids.at(*s.label);  // fail before any work
    std::vector<VideoScore> scores;
    for (const auto& s : seqs) {
        const auto v = embed_video(s, ck.params, ck.encoder, ck.norm, ck.window, ck.masked_groups);
        scores.push_back(score_video(v, *s.label, centroids));
        scores.back().video_id = s.video_id;
    }
    if (scores.empty()) throw ValidationError("no videos to score");
    fs::create_directories(run_dir_for_file(out));
    if (fmt_kind == ReportFormat::csv) {
        write_text(out, scores_csv(scores));
    } else {
        write_json(out, scores_json(scores));
    }
    write_run_json(c, run_dir_for_file(out), inputs_json(in));
    return 0;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline int run_sweep(RunConfig c, const Inputs& in) {
    const fs::path out = output_path(c);
    if (!in.kinds.empty()) c.sweep.kinds = split_list(in.kinds);
    if (!in.severities.empty()) {
        c.sweep.severities.clear();
        for (const auto& s : split_list(in.severities)) {
            try {
                c.sweep.severities.push_back(std::stod(s));
            } catch (const std::exception&) {
                throw ValidationError("bad severity '" + s + "'");
            }
        }
    }
    std::vector<DistortionKind> kinds;
    for (const auto& k : c.sweep.kinds) kinds.push_back(parse_distortion_kind(k));
    const auto formats = parse_formats(in.formats);
    const auto ck = load_checkpoint(in.checkpoint);
    const auto centroids = load_centroids(in.centroids);
    const auto seqs = load_or_default_split(in, "test");
    require_labels(seqs);
    const auto windows = make_windows(seqs, ck.norm, ck.window);
    const auto result = sensitivity_sweep(windows, ck.params, ck.encoder, ck.norm, centroids, kinds,
                                          c.sweep.severities, c.sweep.seed, ck.masked_groups);
    std::vector<SweepSensitivity> sens;
    for (const auto& k : c.sweep.kinds) sens.push_back(sweep_sensitivity(result, k));
    fs::create_directories(out);
    if (formats.count(ReportFormat::csv)) write_text(out / "sweep.csv", sweep_csv(result));
    if (formats.count(ReportFormat::json)) write_json(out / "sweep.json", sweep_json(result, sens));
    if (formats.count(ReportFormat::svg)) {
        for (const auto& [name, svg] : sweep_svgs(result)) write_text(out / name, svg);
    }
    for (const auto& s : sens) {
        std::cout << s.kind << ": spearman(severity, mean s_cons) " << fmt(s.rho_s_cons)
                  << ", spearman(severity, mean s_temp) " << fmt(s.rho_s_temp) << "\n";
    }
    write_run_json(c, out, inputs_json(in));
    return 0;
}

inline int run_attention(const RunConfig& c, const Inputs& in) {
    const fs::path out = c.output.empty() ? output_path(c) / "attention.json" : fs::path(c.output);
    const auto ck = load_checkpoint(in.checkpoint);
    const auto seqs = load_or_default_split(in, "test");
    const auto report = attention_report(embed_all(ck, seqs), ck.encoder);
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json j = schema_header("actman-attention");
    j["groups"] = report.groups;
    j["frames"] = report.frames;
    j["overall"] = vec(report.overall);
    j["per_class"] = json::object();
    for (const auto& [label, v] : report.per_class) j["per_class"][label] = vec(v);
    fs::create_directories(run_dir_for_file(out));
    write_json(out, j);
    write_run_json(c, run_dir_for_file(out), inputs_json(in));
    return 0;
}

inline int run_active_sample(const RunConfig& c, const Inputs& in) {
    const fs::path out = c.output.empty() ? output_path(c) / "selected.csv" : fs::path(c.output);
    const double keep = in.keep.value_or(c.keep_fraction);
    const auto ck = load_checkpoint(in.checkpoint);
    const auto centroids = load_centroids(in.centroids);
    const auto seqs = load_or_default_split(in, "");
    require_labels(seqs);
    const auto emb = embed_all(ck, seqs);
    const auto kept = active_sample(emb, centroids, keep);
    std::ostringstream os;
    os << "rank,video_id,start_frame,label,distance\n";
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& w = emb[kept[i].index];
        os << i + 1 << ',' << w.video_id << ',' << w.start_frame << ',' << *w.label << ',' << fmt(kept[i].distance) << '\n';
    }
    fs::create_directories(run_dir_for_file(out));
    write_text(out, os.str());
    write_run_json(c, run_dir_for_file(out), inputs_json(in));
    return 0;
}

inline int run_stats(const RunConfig& c, const Inputs& in) {
    const fs::path out = output_path(c);
    if (in.ratings.empty()) throw ValidationError("--ratings is required");
    const auto formats = parse_formats(in.formats);
    const auto table = read_rater_csv(in.ratings, in.axis);
    const auto study = run_study(table, in.interrater_threshold);
    if (study.mos.empty()) throw ValidationError("no video kept any retained rating");
    fs::create_directories(out);
    if (formats.count(ReportFormat::csv)) write_text(out / "mos.csv", mos_csv(study.mos));
    if (formats.count(ReportFormat::json)) write_json(out / "study.json", study_json(table, study));

    // win ratios over MOS when videos carry model/prompt metadata
    std::vector<std::string> models, prompts;
    for (int v = 0; v < table.num_videos(); ++v) {
        if (table.model[v].empty() || table.prompt[v].empty()) continue;
        if (std::find(models.begin(), models.end(), table.model[v]) == models.end()) models.push_back(table.model[v]);
        if (std::find(prompts.begin(), prompts.end(), table.prompt[v]) == prompts.end()) prompts.push_back(table.prompt[v]);
    }
    if (models.size() >= 2) {
        std::sort(models.begin(), models.end());
        std::sort(prompts.begin(), prompts.end());
        std::vector<std::vector<double>> grid(models.size(), std::vector<double>(prompts.size(), std::nan("")));
        for (const auto& m : study.mos) {
            const int v = table.find_video(m.video_id);
            if (table.model[v].empty()) continue;
            const auto mi = std::find(models.begin(), models.end(), table.model[v]) - models.begin();
            const auto pi = std::find(prompts.begin(), prompts.end(), table.prompt[v]) - prompts.begin();
            grid[mi][pi] = m.mos;
        }
        const auto ratios = win_ratio(grid);
        std::ostringstream os;
        os << "model,win_ratio\n";
        for (std::size_t i = 0; i < models.size(); ++i) os << models[i] << ',' << fmt(ratios[i]) << '\n';
        write_text(out / "win_ratio.csv", os.str());
    }
    if (!in.convergence_videos.empty()) {
        const auto curves = convergence_curve(table, in.convergence_videos);
        if (formats.count(ReportFormat::csv)) write_text(out / "convergence.csv", convergence_csv(curves));
        if (formats.count(ReportFormat::svg)) write_text(out / "convergence.svg", convergence_svg(curves));
    }
    std::cout << "raters " << table.num_raters() << ": rejected " << study.rejected_repeat << " (repeat), "
              << study.rejected_bt500 << " (BT.500), " << study.rejected_interrater << " (inter-rater)\n";
    write_run_json(c, out, inputs_json(in));
    return 0;
}

// ---- entry point ---------------------------------------------------------------------

inline int dispatch(int argc, const char* const* argv, std::ostream& err = std::cerr) {
    CLI::App app{"actman: action-manifold video evaluation toolkit", "actman"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    RunConfig cfg;
    Inputs in;
    std::function<int()> action;
    std::uint64_t seed_value = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", cfg.config_path, "JSON config file with synth/encoder/window/training/sweep sections")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", cfg.output, "Output path (default: $ACTMAN_OUTPUT_ROOT/<subcommand>)");
        sub->add_option("--seed", seed_value, "Seed applied to data generation, initialization, training and sweeps");
        sub->add_option("--set", cfg.overrides, "Override a config value, e.g. --set training.epochs=5")
            ->type_name("SECTION.KEY=VALUE");
    };
    auto need_checkpoint = [&](CLI::App* sub) {
        sub->add_option("--checkpoint", in.checkpoint, "Checkpoint directory written by `train`")->required();
    };
    auto features = [&](CLI::App* sub, bool required) {
        auto* o = sub->add_option("--features", in.features, "Feature directory (index.csv or *.manifest.json)");
        if (required) o->required();
        sub->add_option("--split", in.split, "Restrict to one split of index.csv");
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled feature dataset");
    common(synth);
    synth->callback([&] { action = [&] { return run_synth(cfg, in); }; });

    auto* trn = app.add_subcommand("train", "Train the encoder; writes a checkpoint, centroids and history");
    common(trn);
    features(trn, true);
    trn->callback([&] { action = [&] { return run_train(cfg, in); }; });

    auto* emb = app.add_subcommand("embed", "Write window and video embeddings as CSV");
    common(emb);
    need_checkpoint(emb);
    features(emb, true);
    emb->callback([&] { action = [&] { return run_embed(cfg, in); }; });

    auto* cen = app.add_subcommand("centroids", "Compute class centroids from labelled features");
    common(cen);
    need_checkpoint(cen);
    features(cen, true);
    cen->callback([&] { action = [&] { return run_centroids(cfg, in); }; });

    auto* sc = app.add_subcommand("score", "Score videos with S_cons and S_temp");
    common(sc);
    need_checkpoint(sc);
    features(sc, true);
    sc->add_option("--centroids", in.centroids, "Centroid file written by `centroids` or `train`")->required();
    sc->add_option("--format", in.format, "csv or json")->capture_default_str();
    sc->callback([&] { action = [&] { return run_score(cfg, in); }; });

    auto* st = app.add_subcommand("stats", "Screen raters and compute MOS, win ratios and convergence curves");
    common(st);
    st->add_option("--ratings", in.ratings, "Ratings CSV")->required();
    st->add_option("--axis", in.axis, "Only use rows of this evaluation axis");
    st->add_option("--convergence-videos", in.convergence_videos, "Videos for cumulative-std curves")->delimiter(',');
    st->add_option("--interrater-threshold", in.interrater_threshold, "Minimum Spearman rho")->capture_default_str();
    st->add_option("--formats", in.formats, "Any of csv,json,svg")->delimiter(',');
    st->callback([&] { action = [&] { return run_stats(cfg, in); }; });

    auto* sw = app.add_subcommand("sweep", "Distortion-sensitivity sweep over kinds and severities");
    common(sw);
    need_checkpoint(sw);
    features(sw, true);
    sw->add_option("--centroids", in.centroids, "Centroid file")->required();
    sw->add_option("--kinds", in.kinds, "Comma-separated subset of shuffle,reverse,copy");
    sw->add_option("--severities", in.severities, "Comma-separated severities in [0,1]");
    sw->add_option("--formats", in.formats, "Any of csv,json,svg")->delimiter(',');
    sw->callback([&] { action = [&] { return run_sweep(cfg, in); }; });

    auto* at = app.add_subcommand("attention-report", "Mean feature-group fusion weights");
    common(at);
    need_checkpoint(at);
    features(at, true);
    at->callback([&] { action = [&] { return run_attention(cfg, in); }; });

    auto* as = app.add_subcommand("active-sample", "Keep the windows closest to their class centroid");
    common(as);
    need_checkpoint(as);
    features(as, true);
    as->add_option("--centroids", in.centroids, "Centroid file")->required();
    as->add_option("--keep", in.keep, "Fraction of windows to keep, in (0, 1]");
    as->callback([&] { action = [&] { return run_active_sample(cfg, in); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::ostringstream os;
        app.exit(e, os, os);
        err << os.str() << app.help();
        return 1;
    }

    try {
        for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
        if (app.get_subcommands().front()->count("--seed")) cfg.seed = seed_value;
        resolve(cfg);
        return action();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace actman::cli
