// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "actman/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace actman {

// Loss value plus its gradient w.r.t. each embedding row.
struct LossResult {
    double value = 0.0;
    RowMatrix grad;
};

// Supervised contrastive loss over unit vectors z (one row per window):
//   L = mean_{i: P(i) nonempty} -(1/|P(i)|) sum_{p in P(i)} log( exp(z_i.z_p/tau) / sum_{a != i} exp(z_i.z_a/tau) )
// Anchors without positives are skipped; a batch without any positives scores 0.
inline LossResult supcon_loss(const RowMatrix& z, const std::vector<int>& labels, double tau) {
    if (!(tau > 0.0)) throw ValidationError("supcon_loss: temperature must be positive");
    const int n = static_cast<int>(z.rows());
    if (static_cast<int>(labels.size()) != n) throw ValidationError("supcon_loss: label count mismatch");
    LossResult r;
    r.grad = RowMatrix::Zero(n, z.cols());
    if (n < 2) return r;
    const RowMatrix sim = (z * z.transpose()) / tau;
    RowMatrix coef = RowMatrix::Zero(n, n);  // dL/dsim
    int valid = 0;
    for (int i = 0; i < n; ++i) {
        int npos = 0;
        for (int a = 0; a < n; ++a) npos += (a != i && labels[a] == labels[i]);
        if (npos == 0) continue;
        ++valid;
        double m = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < n; ++a) {
            if (a != i) m = std::max(m, sim(i, a));
        }
        double denom = 0.0;
        for (int a = 0; a < n; ++a) {
            if (a != i) denom += std::exp(sim(i, a) - m);
        }
        const double lse = m + std::log(denom);
        double pos_sum = 0.0;
        for (int a = 0; a < n; ++a) {
            if (a == i) continue;
            const double soft = std::exp(sim(i, a) - lse);
            const bool pos = labels[a] == labels[i];
            if (pos) pos_sum += sim(i, a);
            coef(i, a) = soft - (pos ? 1.0 / npos : 0.0);
        }
        r.value += lse - pos_sum / npos;
    }
    if (valid == 0) return r;
    r.value /= valid;
    coef /= static_cast<double>(valid);
    // d sim(i,a) / d z_i = z_a / tau and symmetrically for z_a
    r.grad = (coef * z + coef.transpose() * z) / tau;
    return r;
}

// Draws one same-class partner for every anchor (-1 when the anchor's class has
// no other member in the batch).
inline std::vector<int> choose_positives(const std::vector<int>& labels, std::mt19937_64& rng) {
    const int n = static_cast<int>(labels.size());
    std::vector<int> out(n, -1);
    for (int i = 0; i < n; ++i) {
        std::vector<int> cands;
        for (int a = 0; a < n; ++a) {
            if (a != i && labels[a] == labels[i]) cands.push_back(a);
        }
        if (cands.empty()) continue;
        std::uniform_int_distribution<int> pick(0, static_cast<int>(cands.size()) - 1);
        out[i] = cands[pick(rng)];
    }
    return out;
}

struct HardNegativeResult {
    double value = 0.0;
    RowMatrix grad_clean;
    RowMatrix grad_distorted;
};

// InfoNCE with a same-class clean positive and the anchor's own distorted
// variants as negatives:
//   L_i = -log( exp(z_i.z_p/tau) / (exp(z_i.z_p/tau) + sum_{d in D_i} exp(z_i.z_d/tau)) )
// averaged over anchors with a positive and at least one distorted variant.
// `owner[j]` is the anchor index of distorted row j.
inline HardNegativeResult hard_negative_loss(const RowMatrix& clean, const std::vector<int>& positives,
                                             const RowMatrix& distorted, const std::vector<int>& owner,
                                             double tau) {
    if (!(tau > 0.0)) throw ValidationError("hard_negative_loss: temperature must be positive");
    const int n = static_cast<int>(clean.rows());
    const int m = static_cast<int>(distorted.rows());
    if (static_cast<int>(positives.size()) != n || static_cast<int>(owner.size()) != m) {
        throw ValidationError("hard_negative_loss: index vectors do not match embeddings");
    }
    HardNegativeResult r;
    r.grad_clean = RowMatrix::Zero(n, clean.cols());
    r.grad_distorted = RowMatrix::Zero(m, clean.cols());
    std::vector<std::vector<int>> negs(n);
    for (int j = 0; j < m; ++j) {
        if (owner[j] < 0 || owner[j] >= n) throw ValidationError("hard_negative_loss: bad owner index");
        negs[owner[j]].push_back(j);
    }
    int valid = 0;
    for (int i = 0; i < n; ++i) valid += (positives[i] >= 0 && !negs[i].empty());
    if (valid == 0) return r;
    const double w = 1.0 / valid;
    for (int i = 0; i < n; ++i) {
        const int p = positives[i];
        if (p < 0 || negs[i].empty()) continue;
        const double sp = clean.row(i).dot(clean.row(p)) / tau;
        std::vector<double> sd;
        double mx = sp;
        for (int j : negs[i]) {
            sd.push_back(clean.row(i).dot(distorted.row(j)) / tau);
            mx = std::max(mx, sd.back());
        }
        double denom = std::exp(sp - mx);
        for (double s : sd) denom += std::exp(s - mx);
        const double lse = mx + std::log(denom);
        r.value += w * (lse - sp);
        const double gp = w * (std::exp(sp - lse) - 1.0);  // dL/dsp
        r.grad_clean.row(i) += gp * clean.row(p) / tau;
        r.grad_clean.row(p) += gp * clean.row(i) / tau;
        for (std::size_t q = 0; q < negs[i].size(); ++q) {
            const int j = negs[i][q];
            const double gd = w * std::exp(sd[q] - lse);
            r.grad_clean.row(i) += gd * distorted.row(j) / tau;
            r.grad_distorted.row(j) += gd * clean.row(i) / tau;
        }
    }
    return r;
}

// L = L_supcon + lambda * L_hard-negative
inline double total_loss(double supcon, double hard_negative, double lambda) {
    return supcon + lambda * hard_negative;
}

}  // namespace actman
