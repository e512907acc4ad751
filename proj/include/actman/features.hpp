// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "actman/common.hpp"
#include "actman/rotation.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace actman {

// Per-frame dimensions of the human-centric feature bundle.
inline constexpr int kNumJoints = 23;
inline constexpr int kShapeDim = 10;
inline constexpr int kNumKeypoints = 60;  // 18 body + 42 hand
inline constexpr int kVisualDim = 1024;

inline constexpr int kPoseDim = kNumJoints * 9;
inline constexpr int kOrientDim = 9;
inline constexpr int kKeypointDim = kNumKeypoints * 2;
inline constexpr int kFrameDim = kPoseDim + kOrientDim + kShapeDim + kKeypointDim + kVisualDim;

// Static block followed by the motion block, same layout in both halves.
inline constexpr int kStaticMotionDim = 2 * kFrameDim;

inline constexpr double kKeypointMin = -0.5;
inline constexpr double kKeypointMax = 1.5;

enum class FeatureGroup { pose, global_orient, shape, keypoints, visual };

struct GroupSlice {
    FeatureGroup group;
    std::string_view name;
    int offset;
    int size;
};

// Flattening order: pose (joint-major, each 3x3 row-major), global orientation,
// shape, keypoints (point-major, x then y), visual.
inline constexpr std::array<GroupSlice, 5> kGroupLayout{{
    {FeatureGroup::pose, "pose", 0, kPoseDim},
    {FeatureGroup::global_orient, "global_orient", kPoseDim, kOrientDim},
    {FeatureGroup::shape, "shape", kPoseDim + kOrientDim, kShapeDim},
    {FeatureGroup::keypoints, "keypoints", kPoseDim + kOrientDim + kShapeDim, kKeypointDim},
    {FeatureGroup::visual, "visual", kPoseDim + kOrientDim + kShapeDim + kKeypointDim,
     kVisualDim},
}};

inline const GroupSlice& group_slice(std::string_view name) {
    for (const auto& g : kGroupLayout) {
        if (g.name == name) return g;
    }
    throw ValidationError("unknown feature group '" + std::string(name) + "'");
}

using ShapeVector = Eigen::Matrix<double, kShapeDim, 1>;
using KeypointMatrix = Eigen::Matrix<double, kNumKeypoints, 2, Eigen::RowMajor>;

struct FrameFeatures {
    std::array<Mat3, kNumJoints> pose;
    Mat3 global_orient = Mat3::Identity();
    ShapeVector shape = ShapeVector::Zero();
    KeypointMatrix keypoints = KeypointMatrix::Constant(0.5);
    Vector visual = Vector::Zero(kVisualDim);

    FrameFeatures() { pose.fill(Mat3::Identity()); }
};

// First-order temporal features. Rotations are relative (next * prev^T); the
// remaining groups hold elementwise differences.
struct MotionFeatures {
    std::array<Mat3, kNumJoints> pose_rel;
    Mat3 go_rel = Mat3::Identity();
    ShapeVector shape_diff = ShapeVector::Zero();
    KeypointMatrix kp_diff = KeypointMatrix::Zero();
    Vector vis_diff = Vector::Zero(kVisualDim);

    MotionFeatures() { pose_rel.fill(Mat3::Identity()); }
};

struct FeatureSequence {
    std::vector<FrameFeatures> frames;
    double fps = 25.0;
    std::string video_id;
    std::optional<std::string> label;
    std::optional<std::string> subject_id;

    int length() const { return static_cast<int>(frames.size()); }
};

namespace detail {

template <typename Derived>
void put_rotation(const Mat3& r, Eigen::MatrixBase<Derived>& out, int offset) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(offset + 3 * i + j) = r(i, j);
}

template <typename Derived>
Mat3 get_rotation(const Eigen::MatrixBase<Derived>& in, int offset) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = in(offset + 3 * i + j);
    return r;
}

inline void check_finite(double v, std::string_view field, int frame) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "frame " << frame << ": non-finite value in " << field;
        throw ValidationError(os.str());
    }
}

}  // namespace detail

inline void validate(const FrameFeatures& f, int frame = 0) {
    for (int j = 0; j < kNumJoints; ++j) {
        if (!is_rotation(f.pose[j])) {
            std::ostringstream os;
            os << "frame " << frame << ": pose";
            check_rotation(f.pose[j], os.str(), j);
        }
    }
    if (!is_rotation(f.global_orient)) {
        std::ostringstream os;
        os << "frame " << frame << ": global_orient";
        check_rotation(f.global_orient, os.str());
    }
    for (int i = 0; i < kShapeDim; ++i) detail::check_finite(f.shape(i), "shape", frame);
    for (int i = 0; i < kNumKeypoints; ++i) {
        for (int c = 0; c < 2; ++c) {
            const double v = f.keypoints(i, c);
            detail::check_finite(v, "keypoints", frame);
            if (v < kKeypointMin || v > kKeypointMax) {
                std::ostringstream os;
                os << "frame " << frame << ": keypoint " << i << " coordinate " << v
                   << " outside [" << kKeypointMin << ", " << kKeypointMax << "]";
                throw ValidationError(os.str());
            }
        }
    }
    if (f.visual.size() != kVisualDim) {
        std::ostringstream os;
        os << "frame " << frame << ": visual has " << f.visual.size() << " values, expected "
           << kVisualDim;
        throw ValidationError(os.str());
    }
    for (int i = 0; i < kVisualDim; ++i) detail::check_finite(f.visual(i), "visual", frame);
}

inline void validate(const FeatureSequence& seq) {
    if (seq.frames.empty()) {
        throw ValidationError("sequence '" + seq.video_id + "' has no frames");
    }
    if (!(seq.fps > 0.0)) {
        throw ValidationError("sequence '" + seq.video_id + "' has non-positive fps");
    }
    for (int t = 0; t < seq.length(); ++t) validate(seq.frames[t], t);
}

inline Vector flatten(const FrameFeatures& f) {
    Vector out(kFrameDim);
    for (int j = 0; j < kNumJoints; ++j) detail::put_rotation(f.pose[j], out, 9 * j);
    detail::put_rotation(f.global_orient, out, kPoseDim);
    out.segment(kGroupLayout[2].offset, kShapeDim) = f.shape;
    for (int i = 0; i < kNumKeypoints; ++i) {
        out(kGroupLayout[3].offset + 2 * i) = f.keypoints(i, 0);
        out(kGroupLayout[3].offset + 2 * i + 1) = f.keypoints(i, 1);
    }
    out.segment(kGroupLayout[4].offset, kVisualDim) = f.visual;
    return out;
}

inline Vector flatten(const MotionFeatures& m) {
    Vector out(kFrameDim);
    for (int j = 0; j < kNumJoints; ++j) detail::put_rotation(m.pose_rel[j], out, 9 * j);
    detail::put_rotation(m.go_rel, out, kPoseDim);
    out.segment(kGroupLayout[2].offset, kShapeDim) = m.shape_diff;
    for (int i = 0; i < kNumKeypoints; ++i) {
        out(kGroupLayout[3].offset + 2 * i) = m.kp_diff(i, 0);
        out(kGroupLayout[3].offset + 2 * i + 1) = m.kp_diff(i, 1);
    }
    out.segment(kGroupLayout[4].offset, kVisualDim) = m.vis_diff;
    return out;
}

template <typename Derived>
FrameFeatures unflatten(const Eigen::MatrixBase<Derived>& v) {
    if (v.size() != kFrameDim) {
        std::ostringstream os;
        os << "unflatten: expected " << kFrameDim << " values, got " << v.size();
        throw ValidationError(os.str());
    }
    FrameFeatures f;
    for (int j = 0; j < kNumJoints; ++j) f.pose[j] = detail::get_rotation(v, 9 * j);
    f.global_orient = detail::get_rotation(v, kPoseDim);
    for (int i = 0; i < kShapeDim; ++i) f.shape(i) = v(kGroupLayout[2].offset + i);
    for (int i = 0; i < kNumKeypoints; ++i) {
        f.keypoints(i, 0) = v(kGroupLayout[3].offset + 2 * i);
        f.keypoints(i, 1) = v(kGroupLayout[3].offset + 2 * i + 1);
    }
    f.visual = v.segment(kGroupLayout[4].offset, kVisualDim);
    return f;
}

// One row per frame, flattened static features.
inline RowMatrix flatten_frames(const FeatureSequence& seq) {
    RowMatrix out(seq.length(), kFrameDim);
    for (int t = 0; t < seq.length(); ++t) out.row(t) = flatten(seq.frames[t]).transpose();
    return out;
}

inline MotionFeatures motion_between(const FrameFeatures& prev, const FrameFeatures& next) {
    MotionFeatures m;
    for (int j = 0; j < kNumJoints; ++j) m.pose_rel[j] = relative_rotation(prev.pose[j], next.pose[j], j);
    m.go_rel = relative_rotation(prev.global_orient, next.global_orient);
    m.shape_diff = next.shape - prev.shape;
    m.kp_diff = next.keypoints - prev.keypoints;
    m.vis_diff = next.visual - prev.visual;
    return m;
}

// Frame 0 gets identity rotations and zero differences.
inline std::vector<MotionFeatures> derive_motion(const FeatureSequence& seq) {
    if (seq.frames.empty()) throw ValidationError("derive_motion: empty sequence");
    std::vector<MotionFeatures> out(seq.frames.size());
    for (std::size_t t = 1; t < seq.frames.size(); ++t) {
        out[t] = motion_between(seq.frames[t - 1], seq.frames[t]);
    }
    return out;
}

// Same as derive_motion, over flattened static rows (one row per frame).
inline RowMatrix derive_motion_rows(const RowMatrix& raw) {
    const int n = static_cast<int>(raw.rows());
    RowMatrix out = RowMatrix::Zero(n, kFrameDim);
    const Vector identity = flatten(MotionFeatures{});
    if (n == 0) return out;
    out.row(0) = identity.transpose();
    for (int t = 1; t < n; ++t) {
        auto prev = raw.row(t - 1);
        auto next = raw.row(t);
        auto dst = out.row(t);
        for (int j = 0; j <= kNumJoints; ++j) {
            const int off = 9 * j;
            const Mat3 rel = relative_rotation(detail::get_rotation(prev, off),
                                               detail::get_rotation(next, off),
                                               j < kNumJoints ? j : -1);
            detail::put_rotation(rel, dst, off);
        }
        const int rest = kPoseDim + kOrientDim;
        dst.tail(kFrameDim - rest) = next.tail(kFrameDim - rest) - prev.tail(kFrameDim - rest);
    }
    return out;
}

// Per-dimension z-scoring statistics over the static block followed by the motion block.
struct NormStats {
    Vector mean;
    Vector stddev;  // already floored
    double std_floor = 1e-6;

    int dims() const { return static_cast<int>(mean.size()); }

    RowMatrix apply(const RowMatrix& rows, int offset) const {
        const int d = static_cast<int>(rows.cols());
        if (offset + d > dims()) throw ValidationError("NormStats: dimension mismatch");
        RowMatrix out = rows;
        for (int c = 0; c < d; ++c) {
            out.col(c) = (out.col(c).array() - mean(offset + c)) / stddev(offset + c);
        }
        return out;
    }

    RowMatrix invert(const RowMatrix& rows, int offset) const {
        const int d = static_cast<int>(rows.cols());
        if (offset + d > dims()) throw ValidationError("NormStats: dimension mismatch");
        RowMatrix out = rows;
        for (int c = 0; c < d; ++c) {
            out.col(c) = out.col(c).array() * stddev(offset + c) + mean(offset + c);
        }
        return out;
    }

    RowMatrix normalize_static(const RowMatrix& raw) const { return apply(raw, 0); }
    RowMatrix normalize_motion(const RowMatrix& raw) const { return apply(raw, kFrameDim); }
};

// Static block then motion block, one row per frame (L x 2*kFrameDim), unnormalized.
inline RowMatrix static_motion_rows(const FeatureSequence& seq) {
    const RowMatrix stat = flatten_frames(seq);
    RowMatrix out(stat.rows(), kStaticMotionDim);
    out.leftCols(kFrameDim) = stat;
    out.rightCols(kFrameDim) = derive_motion_rows(stat);
    return out;
}

inline NormStats fit_norm_stats(const std::vector<RowMatrix>& rows, double std_floor = 1e-6) {
    if (rows.empty()) throw ValidationError("normalization: empty training set");
    const int d = static_cast<int>(rows.front().cols());
    Vector sum = Vector::Zero(d);
    Vector sumsq = Vector::Zero(d);
    long count = 0;
    for (const auto& r : rows) {
        if (r.cols() != d) throw ValidationError("normalization: inconsistent row widths");
        sum += r.colwise().sum().transpose();
        count += r.rows();
    }
    if (count == 0) throw ValidationError("normalization: empty training set");
    NormStats stats;
    stats.std_floor = std_floor;
    stats.mean = sum / static_cast<double>(count);
    // second pass for numerical stability
    for (const auto& r : rows) {
        sumsq += (r.rowwise() - stats.mean.transpose()).array().square().matrix().colwise().sum().transpose();
    }
    stats.stddev = (sumsq / static_cast<double>(count)).array().sqrt().max(std_floor).matrix();
    return stats;
}

// Statistics over every frame of the training sequences.
inline NormStats fit_normalization(const std::vector<FeatureSequence>& train_seqs, double std_floor = 1e-6) {
    std::vector<RowMatrix> rows;
    rows.reserve(train_seqs.size());
    for (const auto& s : train_seqs) rows.push_back(static_motion_rows(s));
    return fit_norm_stats(rows, std_floor);
}

struct NormalizedSet {
    NormStats stats;
    std::vector<RowMatrix> train;  // per sequence, L x kStaticMotionDim
    std::vector<RowMatrix> other;
};

// Statistics are fit on training frames only, then applied to both sets.
inline NormalizedSet fit_and_apply_normalization(const std::vector<FeatureSequence>& train_seqs,
                                                 const std::vector<FeatureSequence>& other_seqs,
                                                 double std_floor = 1e-6) {
    if (train_seqs.empty()) throw ValidationError("normalization: empty training set");
    NormalizedSet out;
    std::vector<RowMatrix> train_raw;
    train_raw.reserve(train_seqs.size());
    for (const auto& s : train_seqs) train_raw.push_back(static_motion_rows(s));
    out.stats = fit_norm_stats(train_raw, std_floor);
    for (const auto& r : train_raw) out.train.push_back(out.stats.apply(r, 0));
    for (const auto& s : other_seqs) out.other.push_back(out.stats.apply(static_motion_rows(s), 0));
    return out;
}

}  // namespace actman
