// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#include "actman/cli.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace actman;

namespace {

const fs::path& root() {
    static const fs::path p = fs::temp_directory_path() / "actman_cli_test";
    return p;
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "actman");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream err;
    const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), err);
    if (err_text) *err_text = err.str();
    return code;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int count_lines(const fs::path& p) {
    std::ifstream f(p);
    int n = 0;
    for (std::string line; std::getline(f, line);) n += !line.empty();
    return n;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        warnings_enabled() = false;
        fs::remove_all(root());
        fs::create_directories(root());
        write_json(root() / "config.json",
                   json{{"synth", {{"classes", 3}, {"videos_per_class", 3}, {"frames", 24}, {"test_fraction", 0.34}}},
                        {"encoder", {{"d_model", 16}, {"num_heads", 2}, {"num_layers", 1}, {"kernel_size", 3}, {"dilations", {1, 2}}}},
                        {"window", {{"length", 12}, {"overlap", 4}}},
                        {"training", {{"epochs", 1}, {"batch_size", 8}}}});
        ASSERT_EQ(run({"synth", "--config", cfg(), "--seed", "3", "--out", path("data")}), 0);
        ASSERT_EQ(run({"train", "--config", cfg(), "--features", path("data"), "--out", path("model")}), 0);
    }
    static void TearDownTestSuite() {
        fs::remove_all(root());
        warnings_enabled() = true;
    }
    static std::string cfg() { return (root() / "config.json").string(); }
    static std::string path(const std::string& name) { return (root() / name).string(); }
};

}  // namespace

TEST_F(Cli, SynthAndTrainWriteArtifacts) {
    EXPECT_TRUE(fs::exists(root() / "data" / "index.csv"));
    EXPECT_TRUE(fs::exists(root() / "data" / "run.json"));
    EXPECT_EQ(count_lines(root() / "data" / "index.csv"), 1 + 9);
    for (const char* f : {"model.json", "model.f32", "centroids.json", "history.csv", "run.json"}) {
        EXPECT_TRUE(fs::exists(root() / "model" / f)) << f;
    }
    const json run_json = read_json(root() / "data" / "run.json");
    EXPECT_EQ(run_json.at("seed"), 3);
    EXPECT_EQ(run_json.at("config").at("synth").at("classes"), 3);
}

TEST_F(Cli, CheckpointRoundTrip) {
    const auto ck = load_checkpoint(root() / "model");
    EXPECT_EQ(ck.encoder.d_model, 16);
    EXPECT_EQ(ck.window.length, 12);
    save_checkpoint(ck, root() / "model_copy");
    EXPECT_EQ(read_bytes(root() / "model" / "model.f32"), read_bytes(root() / "model_copy" / "model.f32"));
}

TEST_F(Cli, ScoreJsonRoundTrips) {
    const std::string out = path("scores.json");
    ASSERT_EQ(run({"score", "--checkpoint", path("model"), "--features", path("data"), "--centroids",
                   path("model/centroids.json"), "--format", "json", "--out", out}),
              0);
    const auto scores = scores_from_json(read_json(out));
    EXPECT_EQ(scores.size(), 3u);  // test split
    EXPECT_EQ(scores_from_json(scores_json(scores)).size(), scores.size());
    for (const auto& s : scores) {
        EXPECT_GE(s.s_cons, 0.0);
        EXPECT_GE(s.s_temp, 0.0);
    }
    EXPECT_TRUE(fs::exists(root() / "run.json"));
}

TEST_F(Cli, ScoreWithMissingCentroidNamesLabel) {
    json c = read_json(root() / "model" / "centroids.json");
    c["classes"].erase("action_01");
    write_json(root() / "partial.json", c);
    std::string err;
    const std::string out = path("partial_scores.csv");
    EXPECT_EQ(run({"score", "--checkpoint", path("model"), "--features", path("data"), "--centroids",
                   path("partial.json"), "--out", out},
                  &err),
              1);
    EXPECT_NE(err.find("action_01"), std::string::npos) << err;
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, SweepCoversEveryKindAndSeverity) {
    ASSERT_EQ(run({"sweep", "--checkpoint", path("model"), "--features", path("data"), "--centroids",
                   path("model/centroids.json"), "--formats", "csv,json,svg", "--out", path("sweep")}),
              0);
    EXPECT_EQ(count_lines(root() / "sweep" / "sweep.csv"), 1 + 18 + 1);
    const auto rows = sweep_rows_from_json(read_json(root() / "sweep" / "sweep.json"));
    ASSERT_EQ(rows.size(), 19u);
    EXPECT_EQ(rows[0].kind, "none");
    for (const auto& r : rows) {
        if (r.severity == 0.0) {
            EXPECT_EQ(r.mean_s_cons, rows[0].mean_s_cons);
            EXPECT_EQ(r.mean_s_temp, rows[0].mean_s_temp);
        }
    }
    EXPECT_TRUE(fs::exists(root() / "sweep" / "sweep_s_temp.svg"));
}

TEST_F(Cli, OtherSubcommands) {
    EXPECT_EQ(run({"embed", "--checkpoint", path("model"), "--features", path("data"), "--out", path("embed")}), 0);
    EXPECT_EQ(count_lines(root() / "embed" / "video_embeddings.csv"), 1 + 9);
    EXPECT_EQ(run({"centroids", "--checkpoint", path("model"), "--features", path("data"), "--out", path("c.json")}), 0);
    EXPECT_EQ(centroids_from_json(read_json(root() / "c.json")).centroids.size(), 3u);
    EXPECT_EQ(run({"attention-report", "--checkpoint", path("model"), "--features", path("data"), "--out",
                   path("attention.json")}),
              0);
    const json att = read_json(root() / "attention.json");
    EXPECT_EQ(att.at("per_class").size(), 3u);
    EXPECT_EQ(run({"active-sample", "--checkpoint", path("model"), "--features", path("data"), "--centroids",
                   path("model/centroids.json"), "--keep", "0.5", "--out", path("selected.csv")}),
              0);
    EXPECT_GT(count_lines(root() / "selected.csv"), 1);
}

TEST_F(Cli, StatsWritesReports) {
    std::ostringstream csv;
    csv << "rater_id,video_id,axis,score,is_duplicate_group,model,prompt\n";
    for (int r = 0; r < 6; ++r) {
        for (int v = 0; v < 12; ++v) {
            const int score = (v * 7 % 10 + (r % 2)) % 11;
            csv << "r" << r << ",v" << v << ",visual," << score << ',' << (v < 2 ? "g0" : "") << ",m" << v % 2 << ",p"
                << v / 2 << '\n';
        }
    }
    write_text(root() / "ratings.csv", csv.str());
    ASSERT_EQ(run({"stats", "--ratings", path("ratings.csv"), "--axis", "visual", "--convergence-videos", "v0,v1",
                   "--formats", "csv,json,svg", "--out", path("stats")}),
              0);
    for (const char* f : {"mos.csv", "study.json", "win_ratio.csv", "convergence.csv", "convergence.svg", "run.json"}) {
        EXPECT_TRUE(fs::exists(root() / "stats" / f)) << f;
    }
}

TEST_F(Cli, ErrorsMapToExitCodes) {
    std::string err;
    EXPECT_EQ(run({}, &err), 1);
    EXPECT_EQ(run({"train", "--bogus"}, &err), 1);
    write_json(root() / "bad.json", json{{"training", {{"epochz", 3}}}});
    EXPECT_EQ(run({"synth", "--config", path("bad.json"), "--out", path("never")}, &err), 1);
    EXPECT_NE(err.find("epochz"), std::string::npos);
    EXPECT_FALSE(fs::exists(root() / "never"));
    EXPECT_EQ(run({"synth", "--set", "synth.classes=1", "--out", path("never")}, &err), 1);
    EXPECT_EQ(run({"score", "--checkpoint", path("model"), "--features", path("data"), "--centroids",
                   path("model/centroids.json"), "--format", "xml"},
                  &err),
              1);
    EXPECT_NE(err.find("xml"), std::string::npos);
    EXPECT_EQ(run({"score", "--checkpoint", path("nowhere"), "--features", path("data"), "--centroids",
                   path("model/centroids.json")},
                  &err),
              2);
    EXPECT_EQ(run({"sweep", "--checkpoint", path("model"), "--features", path("data"), "--centroids",
                   path("model/centroids.json"), "--kinds", "wobble", "--out", path("never")},
                  &err),
              1);
}

TEST_F(Cli, EmptySelectionWritesNothing) {
    std::string err;
    const std::string out = path("empty_scores.csv");
    EXPECT_EQ(run({"score", "--checkpoint", path("model"), "--features", path("data"), "--split", "nosuch",
                   "--centroids", path("model/centroids.json"), "--out", out},
                  &err),
              1);
    EXPECT_FALSE(fs::exists(out));
}

TEST(Report, ChartNeedsData) {
    EXPECT_THROW(line_chart_svg("t", "x", "y", {}), ValidationError);
    EXPECT_THROW(parse_report_format("pdf"), ValidationError);
    EXPECT_EQ(fmt(0.1), "0.1");
    EXPECT_EQ(std::stod(fmt(1.0 / 3.0)), 1.0 / 3.0);
}
