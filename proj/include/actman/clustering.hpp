// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "actman/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace actman {

struct KMeansResult {
    std::vector<int> assignment;
    RowMatrix centers;
    double inertia = std::numeric_limits<double>::infinity();
};

namespace detail {

inline KMeansResult kmeans_once(const RowMatrix& x, int k, std::mt19937_64& rng, int max_iter) {
    const int n = static_cast<int>(x.rows());
    RowMatrix centers(k, x.cols());
    // k-means++ seeding
    std::uniform_int_distribution<int> first(0, n - 1);
    centers.row(0) = x.row(first(rng));
    Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        int pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng);
            for (pick = 0; pick < n - 1; ++pick) {
                r -= d2(pick);
                if (r <= 0.0) break;
            }
        } else {
            pick = first(rng);
        }
        centers.row(c) = x.row(pick);
        d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    KMeansResult res;
    res.assignment.assign(n, -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dd = (x.row(i) - centers.row(c)).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            if (res.assignment[i] != best) changed = true;
            res.assignment[i] = best;
            inertia += best_d;
        }
        res.inertia = inertia;
        if (!changed && iter > 0) break;
        RowMatrix sums = RowMatrix::Zero(k, x.cols());
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(res.assignment[i]) += x.row(i);
            ++counts[res.assignment[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
        }
    }
    res.centers = centers;
    return res;
}

}  // namespace detail

// Lloyd's algorithm from k-means++ seeds; keeps the restart with the lowest inertia.
inline KMeansResult kmeans(const RowMatrix& x, int k, std::uint64_t seed, int restarts = 10,
                           int max_iter = 300) {
    if (k < 1) throw ValidationError("kmeans: k must be positive");
    if (x.rows() < k) {
        throw ValidationError("kmeans: " + std::to_string(x.rows()) + " points is fewer than k = " +
                              std::to_string(k));
    }
    std::mt19937_64 rng(seed);
    KMeansResult best;
    for (int r = 0; r < std::max(1, restarts); ++r) {
        KMeansResult cur = detail::kmeans_once(x, k, rng, max_iter);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

// I(A;B) / ((H(A) + H(B)) / 2), natural log. Two single-cluster partitions score 1.
inline double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty()) throw ValidationError("nmi: label vectors differ in length or are empty");
    const double n = static_cast<double>(a.size());
    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> pab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
        pab[{a[i], b[i]}] += 1.0;
    }
    auto entropy = [n](const std::map<int, double>& counts) {
        double h = 0.0;
        for (const auto& [_, c] : counts) h -= (c / n) * std::log(c / n);
        return h;
    };
    const double ha = entropy(pa);
    const double hb = entropy(pb);
    double mi = 0.0;
    for (const auto& [key, c] : pab) {
        const double pj = c / n;
        mi += pj * std::log(pj / ((pa[key.first] / n) * (pb[key.second] / n)));
    }
    const double denom = 0.5 * (ha + hb);
    if (denom <= 0.0) return 1.0;
    return std::clamp(mi / denom, 0.0, 1.0);
}

// Maps string labels to dense indices in sorted label order.
inline std::vector<int> encode_labels(const std::vector<std::string>& labels,
                                      std::vector<std::string>* names = nullptr) {
    std::map<std::string, int> index;
    for (const auto& l : labels) index.emplace(l, 0);
    int next = 0;
    for (auto& [_, v] : index) v = next++;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(index.at(l));
    if (names) {
        names->clear();
        for (const auto& [k, _] : index) names->push_back(k);
    }
    return out;
}

// K-means (k-means++ seeding, 10 restarts) followed by NMI against the labels.
inline double nmi_eval(const RowMatrix& embeddings, const std::vector<std::string>& labels, int k,
                       std::uint64_t seed = 0) {
    if (k < 2) throw ValidationError("nmi_eval: K must be at least 2");
    if (static_cast<Eigen::Index>(labels.size()) != embeddings.rows()) {
        throw ValidationError("nmi_eval: label count does not match embeddings");
    }
    const auto clusters = kmeans(embeddings, k, seed, 10);
    return normalized_mutual_information(clusters.assignment, encode_labels(labels));
}

}  // namespace actman
