// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>

namespace actman {

// Input violates a documented contract (shape, range, configuration).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File missing, unreadable, truncated or unwritable.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Warnings go to stderr unless silenced (tests silence them).
inline bool& warnings_enabled() {
    static bool enabled = true;
    return enabled;
}

inline void warn(const std::string& msg) {
    if (warnings_enabled()) std::cerr << "warning: " << msg << "\n";
}

// splitmix64 finalizer, used to derive independent seeds from (seed, index) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace actman
