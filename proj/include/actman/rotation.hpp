// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "actman/common.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <sstream>
#include <string_view>

namespace actman {

using Mat3 = Eigen::Matrix3d;

inline constexpr double kRotationTolerance = 1e-5;

// ||R^T R - I||_F
inline double orthonormality_error(const Mat3& r) {
    return (r.transpose() * r - Mat3::Identity()).norm();
}

inline bool is_rotation(const Mat3& r, double tol = kRotationTolerance) {
    if (!r.allFinite()) return false;
    const double det = r.determinant();
    return orthonormality_error(r) < tol && det >= 1.0 - tol && det <= 1.0 + tol;
}

// Throws ValidationError naming the field and joint index (joint < 0 means none).
inline void check_rotation(const Mat3& r, std::string_view field, int joint = -1) {
    if (is_rotation(r)) return;
    std::ostringstream os;
    os << field;
    if (joint >= 0) os << " joint " << joint;
    os << " is not a rotation matrix (orthonormality error " << orthonormality_error(r)
       << ", det " << r.determinant() << ")";
    throw ValidationError(os.str());
}

// R_next * R_prev^T: the rotation carrying the previous frame's orientation to the next.
inline Mat3 relative_rotation(const Mat3& prev, const Mat3& next, int joint = -1) {
    check_rotation(prev, "relative_rotation: previous", joint);
    check_rotation(next, "relative_rotation: next", joint);
    return next * prev.transpose();
}

inline Mat3 axis_angle(const Eigen::Vector3d& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline Mat3 rot_x(double a) { return axis_angle(Eigen::Vector3d::UnitX(), a); }
inline Mat3 rot_y(double a) { return axis_angle(Eigen::Vector3d::UnitY(), a); }
inline Mat3 rot_z(double a) { return axis_angle(Eigen::Vector3d::UnitZ(), a); }

}  // namespace actman
