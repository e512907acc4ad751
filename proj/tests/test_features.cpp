// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#include "actman/features.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace actman;
using actman::testing::random_rotation;
using actman::testing::random_sequence;

namespace {

Mat3 matmul_oracle(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

}  // namespace

TEST(Rotation, IdenticalFramesGiveIdentity) {
    const Mat3 r = rot_z(std::numbers::pi / 2);
    EXPECT_LT((relative_rotation(r, r) - Mat3::Identity()).norm(), 1e-12);
}

TEST(Rotation, IdentityBaseReturnsNext) {
    const Mat3 r = rot_z(std::numbers::pi / 6);
    EXPECT_LT((relative_rotation(Mat3::Identity(), r) - r).norm(), 1e-12);
}

TEST(Rotation, ProductMatchesExplicitMultiplication) {
    const Mat3 rx = rot_x(std::numbers::pi / 2);
    const Mat3 ry = rot_y(std::numbers::pi / 2);
    const Mat3 expected = matmul_oracle(ry, rot_x(-std::numbers::pi / 2));
    const Mat3 got = relative_rotation(rx, ry);
    EXPECT_LT((got - expected).norm(), 1e-12);
    EXPECT_TRUE(is_rotation(got));
}

TEST(Rotation, SelfRelativeIsIdentityForRandomRotations) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const Mat3 r = random_rotation(rng);
        ASSERT_LT((relative_rotation(r, r) - Mat3::Identity()).norm(), 1e-6);
    }
}

TEST(Rotation, NonOrthonormalInputNamesJoint) {
    Mat3 bad = Mat3::Identity();
    bad(0, 0) = 1.1;
    try {
        relative_rotation(Mat3::Identity(), bad, 7);
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("7"), std::string::npos) << e.what();
    }
}

TEST(Features, LayoutMatchesPerFrameDimensions) {
    EXPECT_EQ(kFrameDim, 23 * 9 + 9 + 10 + 120 + 1024);
    int offset = 0;
    for (const auto& g : kGroupLayout) {
        EXPECT_EQ(g.offset, offset) << g.name;
        offset += g.size;
    }
    EXPECT_EQ(offset, kFrameDim);
    EXPECT_EQ(group_slice("visual").size, 1024);
}

TEST(Features, FlattenUnflattenRoundTripsExactly) {
    const auto seq = random_sequence(3, 5);
    for (const auto& f : seq.frames) {
        const Vector v = flatten(f);
        EXPECT_EQ(flatten(unflatten(v)), v);
    }
}

TEST(Features, ValidationRejectsBadFrames) {
    auto seq = random_sequence(2, 9);
    auto f = seq.frames[1];
    f.keypoints(3, 1) = 1.6;
    EXPECT_THROW(validate(f, 1), ValidationError);
    f = seq.frames[1];
    f.pose[4](1, 2) += 0.01;
    try {
        validate(f, 1);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("joint 4"), std::string::npos) << e.what();
    }
    f = seq.frames[1];
    f.visual(10) = std::nan("");
    EXPECT_THROW(validate(f, 1), ValidationError);
    f = seq.frames[1];
    f.global_orient = -Mat3::Identity();  // det -1
    EXPECT_THROW(validate(f, 1), ValidationError);
}

TEST(Motion, ConstantSequenceGivesIdentitiesAndZeros) {
    auto seq = random_sequence(1, 2);
    for (int i = 0; i < 4; ++i) seq.frames.push_back(seq.frames[0]);
    const Vector identity = flatten(MotionFeatures{});
    for (const auto& m : derive_motion(seq)) EXPECT_LT((flatten(m) - identity).norm(), 1e-12);
}

TEST(Motion, SingleFrameIsBoundaryConvention) {
    const auto m = derive_motion(random_sequence(1, 4));
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(flatten(m[0]), flatten(MotionFeatures{}));
}

TEST(Motion, ShapeDifference) {
    auto seq = random_sequence(2, 4);
    seq.frames[0].shape.setZero();
    seq.frames[1].shape.setZero();
    seq.frames[1].shape(0) = 1.0;
    const auto m = derive_motion(seq);
    EXPECT_DOUBLE_EQ(m[1].shape_diff(0), 1.0);
    EXPECT_DOUBLE_EQ(m[1].shape_diff.norm(), 1.0);
}

TEST(Motion, RowsMatchStructuredDerivation) {
    const auto seq = random_sequence(4, 21);
    const auto structured = derive_motion(seq);
    const RowMatrix rows = derive_motion_rows(flatten_frames(seq));
    for (int t = 0; t < 4; ++t) {
        EXPECT_LT((rows.row(t).transpose() - flatten(structured[t])).norm(), 1e-12);
        EXPECT_TRUE(is_rotation(structured[t].go_rel));
    }
}

TEST(Normalization, TrainingSetIsStandardized) {
    std::vector<FeatureSequence> train{random_sequence(6, 1), random_sequence(5, 2)};
    for (auto& s : train)
        for (auto& f : s.frames) f.shape(3) = 0.25;  // constant dimension
    const auto set = fit_and_apply_normalization(train, {});
    RowMatrix all(11, kStaticMotionDim);
    all << set.train[0], set.train[1];
    const Vector mean = all.colwise().mean();
    EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-6);
    const int constant_col = group_slice("shape").offset + 3;
    EXPECT_EQ(set.stats.stddev(constant_col), 1e-6);
    EXPECT_EQ(all.col(constant_col).cwiseAbs().maxCoeff(), 0.0);
    const int col = group_slice("visual").offset + 17;
    const double sd = std::sqrt((all.col(col).array() - all.col(col).mean()).square().mean());
    EXPECT_NEAR(sd, 1.0, 1e-9);
}

TEST(Normalization, HandComputedZScore) {
    // values {0, 2} -> mean 1, population std 1
    const std::vector<RowMatrix> rows{(RowMatrix(2, 1) << 0.0, 2.0).finished()};
    const auto stats = fit_norm_stats(rows);
    EXPECT_DOUBLE_EQ(stats.apply((RowMatrix(1, 1) << 3.0).finished(), 0)(0, 0), 2.0);
}

TEST(Normalization, InvertibleForNonFlooredDimensions) {
    std::vector<FeatureSequence> train{random_sequence(5, 3)};
    const auto set = fit_and_apply_normalization(train, {random_sequence(3, 4)});
    const RowMatrix back = set.stats.invert(set.other[0], 0);
    const RowMatrix raw = static_motion_rows(random_sequence(3, 4));
    double worst = 0.0;
    for (int c = 0; c < kStaticMotionDim; ++c) {
        if (set.stats.stddev(c) > set.stats.std_floor) worst = std::max(worst, (back.col(c) - raw.col(c)).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Normalization, EmptyTrainingSetIsAnError) {
    EXPECT_THROW(fit_and_apply_normalization({}, {}), ValidationError);
}
