// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#include "actman/benchstats.hpp"
#include "stat_oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace actman;
using namespace actman::testing;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rater r scores duplicate pairs (x, x + spread[r]) on top of shared unique videos.
RaterTable duplicate_table(const std::vector<double>& spread) {
    RaterTable t;
    for (std::size_t r = 0; r < spread.size(); ++r) {
        const std::string id = "r" + std::to_string(r);
        t.add(id, "a1", 4.0);
        t.add(id, "a2", 4.0 + spread[r]);
        t.add(id, "u", 5.0);
    }
    t.set_duplicate_group("a1", "g");
    t.set_duplicate_group("a2", "g");
    return t;
}

}  // namespace

TEST(Spearman, Identities) {
    const std::vector<double> x{3, 1, 4, 1.5, 9};
    std::vector<double> rev(x);
    for (auto& v : rev) v = -v;
    EXPECT_DOUBLE_EQ(*spearman(x, x), 1.0);
    EXPECT_DOUBLE_EQ(*spearman(x, rev), -1.0);
    EXPECT_DOUBLE_EQ(*spearman({1, 2, 3}, {1, 3, 2}), 0.5);
    EXPECT_FALSE(spearman({1, 2, 3}, {2, 2, 2}).has_value());
    EXPECT_THROW(spearman({1, 2}, {1}), ValidationError);
}

TEST(Spearman, MatchesRankFormula) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 40);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) x[i] = g(rng), y[i] = g(rng);
        ASSERT_NEAR(*spearman(x, y), spearman_rank_formula(x, y), 1e-12);
        // monotone transforms leave rho unchanged
        std::vector<double> ex(x);
        for (auto& v : ex) v = std::exp(v);
        ASSERT_NEAR(*spearman(ex, y), *spearman(x, y), 1e-12);
    }
}

TEST(Spearman, TiesUseAverageRanks) {
    EXPECT_EQ(average_ranks({10, 20, 20, 30}), (std::vector<double>{1, 2.5, 2.5, 4}));
}

TEST(Percentile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 50), 3.0);
    EXPECT_DOUBLE_EQ(percentile({0, 10}, 95), 9.5);
}

TEST(RepeatConsistency, IdenticalDuplicatesRetained) {
    const auto r = repeat_consistency(duplicate_table({0, 0, 0}), {0, 1, 2});
    EXPECT_EQ(*r.value[0], 0.0);
    EXPECT_EQ(r.retained.size(), 3u);
}

TEST(RepeatConsistency, WideSpreadRaterRejected) {
    std::vector<double> spread(100);
    for (int i = 0; i < 100; ++i) spread[i] = 0.5 + 0.01 * i;
    spread[37] = 6.0;
    const auto t = duplicate_table(spread);
    const auto r = repeat_consistency(t, t.all_raters());
    std::vector<double> values;
    for (double s : spread) values.push_back(s / 2.0);  // population std of a pair
    std::sort(values.begin(), values.end());
    const double pos = 0.95 * 99;
    const double expected = values[94] + (pos - 94) * (values[95] - values[94]);
    EXPECT_NEAR(r.threshold, expected, 1e-12);
    EXPECT_EQ(r.retained.size(), 95u);
    EXPECT_EQ(std::count(r.retained.begin(), r.retained.end(), 37), 0);
}

TEST(RepeatConsistency, EqualSpreadsAllRetained) {
    const auto t = duplicate_table(std::vector<double>(20, 1.0));
    EXPECT_EQ(repeat_consistency_filter(t).size(), 20u);
}

TEST(Bt500, RaterAtMeanIsRetained) {
    std::vector<std::vector<double>> dense(4, std::vector<double>(10));
    for (int v = 0; v < 10; ++v) {
        dense[0][v] = 5;
        dense[1][v] = 3;
        dense[2][v] = 7;
        dense[3][v] = 5;
    }
    const auto r = bt500(table_from_dense(dense), {0, 1, 2, 3});
    EXPECT_EQ(r.raters[0].p + r.raters[0].q, 0);
    EXPECT_FALSE(r.raters[0].rejected);
}

TEST(Bt500, TooFewRatingsRejected) {
    std::vector<std::vector<double>> dense(3, std::vector<double>(10, 5.0));
    dense[2][9] = kNaN;
    const auto kept = bt500_reject(table_from_dense(dense));
    EXPECT_EQ(kept, (std::vector<int>{0, 1}));
}

TEST(Bt500, SystematicOutlierRejected) {
    // four raters agree; the fifth alternates to either extreme
    std::vector<std::vector<double>> dense(5, std::vector<double>(12, 5.0));
    for (int v = 0; v < 12; ++v) dense[4][v] = v % 2 ? 0.0 : 10.0;
    const auto t = table_from_dense(dense);
    const auto oracle = bt500_oracle(dense);
    const auto r = bt500(t, t.all_raters());
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(r.raters[i].p, oracle[i].p) << i;
        EXPECT_EQ(r.raters[i].q, oracle[i].q) << i;
        EXPECT_EQ(r.raters[i].rejected, oracle[i].rejected) << i;
    }
    EXPECT_EQ(r.raters[4].p, 6);
    EXPECT_EQ(r.raters[4].q, 6);
    EXPECT_TRUE(r.raters[4].rejected);
    EXPECT_EQ(r.retained, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Bt500, RandomTablesMatchOracle) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> score(0, 10);
    for (int trial = 0; trial < 50; ++trial) {
        const int raters = 3 + static_cast<int>(rng() % 15);
        std::vector<std::vector<double>> dense(raters, std::vector<double>(14));
        for (auto& row : dense)
            for (auto& s : row) s = (rng() % 9 == 0) ? kNaN : score(rng);
        for (auto& row : dense) row[0] = score(rng);  // no rater is empty
        const auto oracle = bt500_oracle(dense);
        const auto r = bt500(table_from_dense(dense), table_from_dense(dense).all_raters());
        for (int i = 0; i < raters; ++i) {
            ASSERT_EQ(r.raters[i].p, oracle[i].p);
            ASSERT_EQ(r.raters[i].q, oracle[i].q);
            ASSERT_EQ(r.raters[i].n, oracle[i].n);
            ASSERT_EQ(r.raters[i].rejected, oracle[i].rejected);
        }
    }
}

TEST(InterRater, ToyTable) {
    // r0..r2 roughly agree, r3 is noisy, r4 inverts the consensus
    const std::vector<std::vector<double>> dense{
        {1, 2, 3, 4, 5, 6}, {1, 3, 2, 4, 6, 5}, {2, 1, 3, 5, 4, 6}, {4, 1, 6, 2, 5, 3}, {6, 5, 4, 3, 2, 1}};
    const auto t = table_from_dense(dense);
    const auto r = interrater(t, t.all_raters(), 0.55);
    const int n = static_cast<int>(dense.size());
    for (int i = 0; i < n; ++i) {
        std::vector<double> others(6, 0.0);
        for (int v = 0; v < 6; ++v) {
            for (int o = 0; o < n; ++o)
                if (o != i) others[v] += dense[o][v] / (n - 1);
        }
        ASSERT_TRUE(r.rho[i].has_value());
        EXPECT_NEAR(*r.rho[i], spearman_tied(dense[i], others), 1e-12) << i;
    }
    EXPECT_NEAR(*r.rho[0], 0.753702346348183, 1e-9);
    EXPECT_NEAR(*r.rho[4], -0.9276336570439175, 1e-9);
    EXPECT_EQ(r.retained, (std::vector<int>{0, 2}));
    EXPECT_THROW(interrater(t, {0, 1}), ValidationError);
}

TEST(InterRater, IdenticalAndInverted) {
    const std::vector<std::vector<double>> dense{{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}, {4, 3, 2, 1}};
    const auto r = interrater(table_from_dense(dense), {0, 1, 2, 3});
    EXPECT_DOUBLE_EQ(*r.rho[0], 1.0);
    EXPECT_DOUBLE_EQ(*r.rho[3], -1.0);
    EXPECT_EQ(r.retained, (std::vector<int>{0, 1, 2}));
}

TEST(Mos, HandValues) {
    RaterTable one;
    one.add("a", "v", 7);
    one.add("b", "v", 9);
    EXPECT_DOUBLE_EQ(mos_zscore(one, {0, 1})[0].mos, 8.0);

    const auto t = table_from_dense({{2, 4, 6}});
    const auto m = mos_zscore(t, {0});
    ASSERT_EQ(m.size(), 3u);
    const double sigma = std::sqrt(8.0 / 3.0);
    EXPECT_NEAR(m[0].z, -2.0 / sigma, 1e-12);
    EXPECT_NEAR(m[0].z, -1.2247, 1e-4);
    EXPECT_EQ(m[1].z, 0.0);
    EXPECT_NEAR(m[2].z, 1.2247, 1e-4);

    const auto flat = mos_zscore(table_from_dense({{5, 5}, {3, 3}}), {0, 1});
    for (const auto& e : flat) EXPECT_EQ(e.z, 0.0);
}

TEST(Mos, VideosWithoutRetainedRatingsExcluded) {
    warnings_enabled() = false;
    const auto m = mos_zscore(table_from_dense({{5, kNaN}, {3, 4}}), {0});
    warnings_enabled() = true;
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].video_id, "v100");
}

TEST(WinRatio, Identities) {
    EXPECT_EQ(win_ratio({{9, 9}, {1, 2}})[0], 1.0);
    const auto tie = win_ratio({{3, 4}, {3, 4}});
    EXPECT_EQ(tie[0], 0.5);
    EXPECT_EQ(tie[1], 0.5);
}

TEST(WinRatio, MatchesPairEnumeration) {
    const std::vector<std::vector<double>> s{{7, 2}, {5, 5}, {5, 9}};
    const auto got = win_ratio(s);
    const auto want = win_ratio_oracle(s);
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(*got[i], want[i]);
        total += *got[i];
    }
    EXPECT_DOUBLE_EQ(total, 1.5);  // M / 2
}

TEST(WinRatio, MissingScoresSkipContests) {
    const auto r = win_ratio({{1, kNaN}, {2, 3}, {kNaN, kNaN}});
    EXPECT_DOUBLE_EQ(*r[0], 0.0);
    EXPECT_DOUBLE_EQ(*r[1], 1.0);
    EXPECT_FALSE(r[2].has_value());
}

TEST(Convergence, CumulativeStd) {
    const auto t = table_from_dense({{4}, {6}, {8}, {6}});
    const auto c = convergence_curve(t, {"v100"});
    ASSERT_EQ(c[0].stds.size(), 3u);
    EXPECT_DOUBLE_EQ(c[0].stds[0], 1.0);
    EXPECT_NEAR(c[0].stds[1], pop_std({4, 6, 8}), 1e-15);
    EXPECT_NEAR(c[0].stds[1], 1.633, 1e-3);
    EXPECT_NEAR(c[0].stds[2], 1.414, 1e-3);
    const auto flat = convergence_curve(table_from_dense({{5}, {5}, {5}}), {"v100"});
    for (double s : flat[0].stds) EXPECT_EQ(s, 0.0);
    EXPECT_THROW(convergence_curve(t, {"nope"}), ValidationError);
}

TEST(RaterCsv, ParsesAndValidates) {
    const auto dir = std::filesystem::temp_directory_path() / "actman_rater_csv";
    std::filesystem::create_directories(dir);
    const auto path = dir / "ratings.csv";
    {
        std::ofstream f(path);
        f << "rater_id,video_id,axis,score,is_duplicate_group\n"
          << "a,v1,visual,7,\n"
          << "a,v2,visual,6,g1\n"
          << "a,v3,visual,6,g1\n"
          << "a,v1,motion,2,\n";
    }
    const auto t = read_rater_csv(path.string(), "visual");
    EXPECT_EQ(t.num_videos(), 3);
    EXPECT_EQ(t.duplicate_group[t.find_video("v2")], "g1");
    {
        std::ofstream f(path);
        f << "rater_id,video_id,axis,score,is_duplicate_group\na,v1,visual,11,\n";
    }
    EXPECT_THROW(read_rater_csv(path.string()), ValidationError);
    {
        std::ofstream f(path);
        f << "rater_id,video_id,score\na,v1,3\n";
    }
    EXPECT_THROW(read_rater_csv(path.string()), ValidationError);
    std::filesystem::remove_all(dir);
}

TEST(Study, PipelineSkipsStagesWithTooFewRaters) {
    warnings_enabled() = false;
    const auto s = run_study(table_from_dense({std::vector<double>(10, 5.0), std::vector<double>(10, 6.0)}));
    warnings_enabled() = true;
    EXPECT_EQ(s.after_interrater.size(), 2u);
    EXPECT_EQ(s.mos.size(), 10u);
}
