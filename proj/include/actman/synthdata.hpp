// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic synthetic skeletal motion. Each class drives every joint with
// a sinusoid about a class-specific axis and spins the body at a class rate;
// keypoints come from forward kinematics of a fixed stick figure.

#pragma once

#include "actman/common.hpp"
#include "actman/features.hpp"
#include "actman/rotation.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace actman {

struct JointMotion {
    Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
    double amplitude = 0.0;  // radians
    double frequency = 1.0;  // Hz
    double phase = 0.0;
};

struct SynthClassSpec {
    std::string name;
    std::array<JointMotion, kNumJoints> joints;
    double spin_rate = 0.0;  // rad/s about the vertical axis
    Vector appearance;       // unit, kVisualDim
    ShapeVector shape_mean = ShapeVector::Zero();
    double shape_std = 1.0;

    void validate() const {
        for (const auto& j : joints) {
            if (std::abs(j.amplitude) > std::numbers::pi) throw ValidationError("joint amplitude exceeds pi");
            if (!(j.frequency > 0.0)) throw ValidationError("joint frequency must be positive");
        }
        if (appearance.size() != kVisualDim) throw ValidationError("appearance direction has wrong size");
    }
};

struct SynthConfig {
    int classes = 5;
    int videos_per_class = 20;
    int frames = 96;
    double fps = 25.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (classes < 2) throw ValidationError("synth: need at least 2 classes");
        if (videos_per_class < 1) throw ValidationError("synth: need at least 1 video per class");
        if (frames < 2) throw ValidationError("synth: need at least 2 frames per video");
        if (!(fps > 0.0)) throw ValidationError("synth: fps must be positive");
    }
};

namespace skeleton {

// 24-joint SMPL-style tree; joint 0 is the pelvis (global orientation), joints
// 1..23 carry the local pose rotations.
inline constexpr std::array<int, kNumJoints + 1> kParents{
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};

inline const std::array<Eigen::Vector3d, kNumJoints + 1>& rest_offsets() {
    static const std::array<Eigen::Vector3d, kNumJoints + 1> offsets{{
        {0, 0, 0},          {0.1, -0.1, 0},   {-0.1, -0.1, 0},  {0, 0.12, 0},    {0, -0.4, 0},
        {0, -0.4, 0},       {0, 0.14, 0},     {0, -0.4, 0},     {0, -0.4, 0},    {0, 0.06, 0},
        {0, -0.05, 0.12},   {0, -0.05, 0.12}, {0, 0.2, 0},      {0.08, 0.12, 0}, {-0.08, 0.12, 0},
        {0, 0.12, 0.03},    {0.1, 0.03, 0},   {-0.1, 0.03, 0},  {0.27, 0, 0},    {-0.27, 0, 0},
        {0.25, 0, 0},       {-0.25, 0, 0},    {0.08, 0, 0},     {-0.08, 0, 0},
    }};
    return offsets;
}

struct Posed {
    std::array<Eigen::Vector3d, kNumJoints + 1> position;
    std::array<Mat3, kNumJoints + 1> orientation;
};

inline Posed forward_kinematics(const Mat3& global_orient, const std::array<Mat3, kNumJoints>& pose,
                                double bone_scale) {
    Posed out;
    out.orientation[0] = global_orient;
    out.position[0] = Eigen::Vector3d::Zero();
    for (int j = 1; j <= kNumJoints; ++j) {
        const int parent = kParents[j];
        out.position[j] = out.position[parent] + out.orientation[parent] * (bone_scale * rest_offsets()[j]);
        out.orientation[j] = out.orientation[parent] * pose[j - 1];
    }
    return out;
}

// 18 body landmarks (OpenPose order) followed by 21 per hand (left, right).
inline std::array<Eigen::Vector3d, kNumKeypoints> landmarks(const Posed& p, double s) {
    std::array<Eigen::Vector3d, kNumKeypoints> out;
    const auto& head = p.position[15];
    const Mat3& hr = p.orientation[15];
    auto at_head = [&](double x, double y, double z) { return Eigen::Vector3d(head + hr * (s * Eigen::Vector3d(x, y, z))); };
    out[0] = at_head(0, 0.05, 0.1);
    out[1] = p.position[12];
    out[2] = p.position[17];
    out[3] = p.position[19];
    out[4] = p.position[21];
    out[5] = p.position[16];
    out[6] = p.position[18];
    out[7] = p.position[20];
    out[8] = p.position[2];
    out[9] = p.position[5];
    out[10] = p.position[8];
    out[11] = p.position[1];
    out[12] = p.position[4];
    out[13] = p.position[7];
    out[14] = at_head(-0.03, 0.08, 0.09);
    out[15] = at_head(0.03, 0.08, 0.09);
    out[16] = at_head(-0.07, 0.05, 0.0);
    out[17] = at_head(0.07, 0.05, 0.0);
    int k = 18;
    for (int hand = 0; hand < 2; ++hand) {
        const int joint = hand == 0 ? 22 : 23;
        const double side = hand == 0 ? 1.0 : -1.0;
        out[k++] = p.position[hand == 0 ? 20 : 21];
        for (int finger = 0; finger < 5; ++finger) {
            for (int seg = 0; seg < 4; ++seg) {
                const Eigen::Vector3d local(side * (0.02 + 0.022 * seg), -0.004 * seg, (finger - 2) * 0.018);
                out[k++] = p.position[joint] + p.orientation[joint] * (s * local);
            }
        }
    }
    return out;
}

}  // namespace skeleton

inline std::string synth_class_name(int k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "action_%02d", k);
    return buf;
}

inline SynthClassSpec make_class_spec(int class_index, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed ^ 0xc1a55ULL, static_cast<std::uint64_t>(class_index)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> amp(0.05, 0.6);
    std::uniform_real_distribution<double> freq(0.4, 1.6);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> spin(0.3, 1.0);
    SynthClassSpec c;
    c.name = synth_class_name(class_index);
    for (auto& j : c.joints) {
        Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
        j.axis = axis.normalized();
        j.amplitude = amp(rng);
        j.frequency = freq(rng);
        j.phase = phase(rng);
    }
    c.spin_rate = spin(rng) * ((rng() & 1ULL) ? 1.0 : -1.0);
    c.appearance = Vector(kVisualDim);
    for (int i = 0; i < kVisualDim; ++i) c.appearance(i) = gauss(rng);
    c.appearance.normalize();
    return c;
}

// Fixed linear map from pose (R - I, flattened) to appearance, shared by all classes.
inline const RowMatrix& pose_to_visual_map(std::uint64_t seed) {
    static std::map<std::uint64_t, RowMatrix> cache;
    auto it = cache.find(seed);
    if (it != cache.end()) return it->second;
    std::mt19937_64 rng(mix_seed(seed ^ 0x715ULL, 0));
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(kPoseDim)));
    RowMatrix m(kVisualDim, kPoseDim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
    return cache.emplace(seed, std::move(m)).first->second;
}

inline FeatureSequence generate_video(const SynthClassSpec& cls, const SynthConfig& cfg, int video_index,
                                      std::uint64_t video_seed) {
    std::mt19937_64 rng(video_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * std::numbers::pi);

    FeatureSequence seq;
    seq.fps = cfg.fps;
    seq.label = cls.name;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_v%03d", cls.name.c_str(), video_index);
    seq.video_id = buf;
    std::snprintf(buf, sizeof(buf), "subject_%03d", video_index);
    seq.subject_id = buf;

    ShapeVector beta;
    for (int i = 0; i < kShapeDim; ++i) beta(i) = cls.shape_mean(i) + cls.shape_std * gauss(rng);
    const double bone_scale = std::clamp(1.0 + 0.03 * beta(0), 0.85, 1.15);

    // subject jitter: common start phase, small per-joint phase/amplitude noise
    const double start_phase = uphase(rng);
    const double tempo = 1.0 + 0.05 * gauss(rng);
    const double initial_yaw = uphase(rng);
    std::array<double, kNumJoints> phase_jitter{}, amp_scale{};
    for (int j = 0; j < kNumJoints; ++j) {
        phase_jitter[j] = 0.15 * gauss(rng);
        amp_scale[j] = std::clamp(1.0 + 0.08 * gauss(rng), 0.7, 1.3);
    }

    const RowMatrix& pose_map = pose_to_visual_map(cfg.seed);
    const Vector identity_pose = flatten(FrameFeatures{}).head(kPoseDim);

    seq.frames.resize(cfg.frames);
    for (int t = 0; t < cfg.frames; ++t) {
        FrameFeatures& f = seq.frames[t];
        const double time = static_cast<double>(t) / cfg.fps;
        for (int j = 0; j < kNumJoints; ++j) {
            const auto& m = cls.joints[j];
            const double angle = std::clamp(m.amplitude * amp_scale[j], -std::numbers::pi, std::numbers::pi) *
                                 std::sin(2.0 * std::numbers::pi * m.frequency * tempo * time + m.phase +
                                          start_phase + phase_jitter[j]);
            f.pose[j] = axis_angle(m.axis, angle);
        }
        f.global_orient = rot_y(initial_yaw + cls.spin_rate * time);
        f.shape = beta;
        const auto posed = skeleton::forward_kinematics(f.global_orient, f.pose, bone_scale);
        const auto lm = skeleton::landmarks(posed, bone_scale);
        for (int i = 0; i < kNumKeypoints; ++i) {
            f.keypoints(i, 0) = std::clamp(0.5 + 0.3 * lm[i].x(), kKeypointMin, kKeypointMax);
            f.keypoints(i, 1) = std::clamp(0.5 - 0.3 * lm[i].y(), kKeypointMin, kKeypointMax);
        }
        const Vector pose_flat = flatten(f).head(kPoseDim) - identity_pose;
        f.visual = cls.appearance + 0.1 * (pose_map * pose_flat);
        for (int i = 0; i < kVisualDim; ++i) f.visual(i) += 0.05 * gauss(rng);
    }
    return seq;
}

// K classes x N videos, ordered class-major. Bit-deterministic given the seed.
inline std::vector<FeatureSequence> generate_dataset(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<FeatureSequence> out;
    out.reserve(static_cast<std::size_t>(cfg.classes) * cfg.videos_per_class);
    for (int k = 0; k < cfg.classes; ++k) {
        const auto spec = make_class_spec(k, cfg.seed);
        spec.validate();
        for (int v = 0; v < cfg.videos_per_class; ++v) {
            const auto index = static_cast<std::uint64_t>(k) * cfg.videos_per_class + v;
            out.push_back(generate_video(spec, cfg, v, mix_seed(cfg.seed, index)));
        }
    }
    return out;
}

struct DatasetSplit {
    std::vector<FeatureSequence> train;
    std::vector<FeatureSequence> test;
};

// Per class, the last round(test_fraction * n) videos (at least one) go to test.
inline DatasetSplit split_by_class(const std::vector<FeatureSequence>& seqs, double test_fraction = 0.2) {
    std::map<std::string, std::vector<const FeatureSequence*>> by_class;
    for (const auto& s : seqs) by_class[s.label.value_or("")].push_back(&s);
    DatasetSplit out;
    for (const auto& [_, members] : by_class) {
        const int n = static_cast<int>(members.size());
        int n_test = static_cast<int>(std::lround(test_fraction * n));
        n_test = std::clamp(n_test, n > 1 ? 1 : 0, n > 1 ? n - 1 : 0);
        for (int i = 0; i < n; ++i) (i < n - n_test ? out.train : out.test).push_back(*members[i]);
    }
    return out;
}

}  // namespace actman
