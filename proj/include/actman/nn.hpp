// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Forward/backward primitives over row-major (time x channel) matrices.

#pragma once

#include "actman/common.hpp"

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace actman::nn {

enum class Activation { gelu, identity };

inline Activation parse_activation(std::string_view s) {
    if (s == "gelu") return Activation::gelu;
    if (s == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + std::string(s) + "'");
}

inline std::string_view to_string(Activation a) {
    return a == Activation::gelu ? "gelu" : "identity";
}

// Exact GELU, x * Phi(x).
template <typename S>
Mat<S> activate(const Mat<S>& x, Activation act) {
    if (act == Activation::identity) return x;
    constexpr S inv_sqrt2 = S(0.70710678118654752440);
    return x.unaryExpr([](S v) { return S(0.5) * v * (S(1) + std::erf(v * inv_sqrt2)); });
}

template <typename S>
Mat<S> activate_backward(const Mat<S>& x, const Mat<S>& grad, Activation act) {
    if (act == Activation::identity) return grad;
    constexpr S inv_sqrt2 = S(0.70710678118654752440);
    constexpr S inv_sqrt2pi = S(0.39894228040143267794);
    return x.binaryExpr(grad, [](S v, S g) {
        const S cdf = S(0.5) * (S(1) + std::erf(v * inv_sqrt2));
        const S pdf = inv_sqrt2pi * std::exp(S(-0.5) * v * v);
        return g * (cdf + v * pdf);
    });
}

// Unfolds a same-length, zero-padded dilated convolution into a (T x kernel*D) matrix.
template <typename S>
Mat<S> im2col(const Mat<S>& x, int kernel, int dilation) {
    const int T = static_cast<int>(x.rows());
    const int D = static_cast<int>(x.cols());
    const int half = kernel / 2;
    Mat<S> cols = Mat<S>::Zero(T, kernel * D);
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < kernel; ++j) {
            const int src = t + (j - half) * dilation;
            if (src >= 0 && src < T) cols.block(t, j * D, 1, D) = x.row(src);
        }
    }
    return cols;
}

template <typename S>
Mat<S> col2im(const Mat<S>& dcols, int D, int kernel, int dilation) {
    const int T = static_cast<int>(dcols.rows());
    const int half = kernel / 2;
    Mat<S> dx = Mat<S>::Zero(T, D);
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < kernel; ++j) {
            const int src = t + (j - half) * dilation;
            if (src >= 0 && src < T) dx.row(src) += dcols.block(t, j * D, 1, D);
        }
    }
    return dx;
}

// y = x W + b, with b stored as a 1 x n matrix.
template <typename S>
Mat<S> linear(const Mat<S>& x, const Mat<S>& w, const Mat<S>& b) {
    Mat<S> y = x * w;
    y.rowwise() += b.row(0);
    return y;
}

// Accumulates dW and db; returns dx when `need_input_grad`.
template <typename S>
Mat<S> linear_backward(const Mat<S>& x, const Mat<S>& w, const Mat<S>& dy, Mat<S>& dw, Mat<S>& db,
                       bool need_input_grad = true) {
    dw.noalias() += x.transpose() * dy;
    db.row(0) += dy.colwise().sum();
    if (!need_input_grad) return Mat<S>();
    return dy * w.transpose();
}

template <typename S>
struct LayerNormCache {
    Mat<S> xhat;
    Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std;
};

template <typename S>
Mat<S> layer_norm(const Mat<S>& x, const Mat<S>& gain, const Mat<S>& bias, LayerNormCache<S>* cache,
                  S eps = S(1e-5)) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    Mat<S> xhat(n, d);
    Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std(n);
    for (int i = 0; i < n; ++i) {
        const S mu = x.row(i).mean();
        const S var = (x.row(i).array() - mu).square().mean();
        inv_std(i) = S(1) / std::sqrt(var + eps);
        xhat.row(i) = (x.row(i).array() - mu) * inv_std(i);
    }
    Mat<S> y = (xhat.array().rowwise() * gain.row(0).array()).matrix();
    y.rowwise() += bias.row(0);
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

template <typename S>
Mat<S> layer_norm_backward(const LayerNormCache<S>& c, const Mat<S>& gain, const Mat<S>& dy,
                           Mat<S>& dgain, Mat<S>& dbias) {
    const int n = static_cast<int>(dy.rows());
    const int d = static_cast<int>(dy.cols());
    dgain.row(0) += (dy.array() * c.xhat.array()).matrix().colwise().sum();
    dbias.row(0) += dy.colwise().sum();
    Mat<S> dx(n, d);
    for (int i = 0; i < n; ++i) {
        const auto dxhat = (dy.row(i).array() * gain.row(0).array()).eval();
        const S sum1 = dxhat.sum();
        const S sum2 = (dxhat * c.xhat.row(i).array()).sum();
        dx.row(i) = (c.inv_std(i) / S(d)) *
                    (S(d) * dxhat - sum1 - c.xhat.row(i).array() * sum2).matrix();
    }
    return dx;
}

// Row-wise softmax.
template <typename S>
Mat<S> softmax_rows(const Mat<S>& x) {
    Mat<S> y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const S m = x.row(i).maxCoeff();
        y.row(i) = (x.row(i).array() - m).exp().matrix();
        y.row(i) /= y.row(i).sum();
    }
    return y;
}

template <typename S>
Mat<S> softmax_rows_backward(const Mat<S>& y, const Mat<S>& dy) {
    Mat<S> dx(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const S dot = y.row(i).dot(dy.row(i));
        dx.row(i) = (y.row(i).array() * (dy.row(i).array() - dot)).matrix();
    }
    return dx;
}

// Row-wise l2 normalization; `norms` receives the pre-normalization lengths.
template <typename S>
Mat<S> l2_normalize_rows(const Mat<S>& x, Eigen::Matrix<S, Eigen::Dynamic, 1>& norms) {
    norms = x.rowwise().norm();
    Mat<S> y = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) /= norms(i);
    return y;
}

template <typename S>
Mat<S> l2_normalize_rows_backward(const Mat<S>& y, const Eigen::Matrix<S, Eigen::Dynamic, 1>& norms,
                                  const Mat<S>& dy) {
    Mat<S> dx(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const S dot = y.row(i).dot(dy.row(i));
        dx.row(i) = (dy.row(i) - dot * y.row(i)) / norms(i);
    }
    return dx;
}

// Sinusoidal positional embedding: PE(pos, 2i) = sin(pos / 10000^(2i/d)),
// PE(pos, 2i+1) = cos(pos / 10000^(2i/d)).
template <typename S>
Mat<S> sinusoidal_positions(int count, int d) {
    Mat<S> pe(count, d);
    for (int pos = 0; pos < count; ++pos) {
        for (int i = 0; 2 * i < d; ++i) {
            const double freq = std::pow(10000.0, -2.0 * i / d);
            pe(pos, 2 * i) = S(std::sin(pos * freq));
            if (2 * i + 1 < d) pe(pos, 2 * i + 1) = S(std::cos(pos * freq));
        }
    }
    return pe;
}

}  // namespace actman::nn
