// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Two-pathway temporal conv blocks per input group, attention fusion across
// groups, and a CLS-token transformer over the window.

#pragma once

#include "actman/common.hpp"
#include "actman/features.hpp"
#include "actman/nn.hpp"
#include "actman/windows.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace actman {

struct InputGroup {
    std::string name;
    int offset = 0;  // first column in the flattened static/motion rows
    int dim = 0;
};

inline std::vector<InputGroup> default_input_groups() {
    std::vector<InputGroup> out;
    for (const auto& g : kGroupLayout) out.push_back({std::string(g.name), g.offset, g.size});
    return out;
}

struct EncoderConfig {
    int d_model = 256;
    int kernel_size = 5;
    std::vector<int> dilations{1, 2, 4};
    int num_layers = 4;
    int num_heads = 8;
    int window = 32;
    int ffn_multiplier = 4;
    std::vector<InputGroup> groups = default_input_groups();
    nn::Activation activation = nn::Activation::gelu;
    std::uint64_t seed = 0;

    int num_groups() const { return static_cast<int>(groups.size()); }

    int input_width() const {
        int w = 0;
        for (const auto& g : groups) w = std::max(w, g.offset + g.dim);
        return w;
    }

    int group_index(const std::string& name) const {
        for (int k = 0; k < num_groups(); ++k) {
            if (groups[k].name == name) return k;
        }
        throw ValidationError("unknown input group '" + name + "'");
    }

    void validate() const {
        if (d_model < 1) throw ValidationError("d_model must be positive");
        if (num_heads < 1 || d_model % num_heads != 0) {
            throw ValidationError("d_model (" + std::to_string(d_model) +
                                  ") must be divisible by the head count (" +
                                  std::to_string(num_heads) + ")");
        }
        if (kernel_size < 1 || kernel_size % 2 == 0) {
            throw ValidationError("kernel_size must be a positive odd number");
        }
        if (dilations.empty()) throw ValidationError("at least one conv layer is required");
        for (int d : dilations) {
            if (d < 1) throw ValidationError("dilations must be positive");
        }
        if (num_layers < 0) throw ValidationError("num_layers must be non-negative");
        if (window < 1) throw ValidationError("window must be positive");
        if (ffn_multiplier < 1) throw ValidationError("ffn_multiplier must be positive");
        if (groups.empty()) throw ValidationError("at least one input group is required");
        for (const auto& g : groups) {
            if (g.dim < 1 || g.offset < 0) {
                throw ValidationError("input group '" + g.name + "' has an invalid slice");
            }
        }
    }
};

template <typename S>
struct ConvLayerParams {
    Mat<S> weight;  // (kernel * d_in) x d_out, tap-major rows
    Mat<S> bias;    // 1 x d_out
};

template <typename S>
struct ConvBlockParams {
    std::vector<ConvLayerParams<S>> layers;
    Mat<S> proj_weight;  // d_in x d, residual projection for the first layer
    Mat<S> proj_bias;
};

template <typename S>
struct TransformerLayerParams {
    Mat<S> ln1_gain, ln1_bias;
    Mat<S> wq, bq, wk, bk, wv, bv, wo, bo;
    Mat<S> ln2_gain, ln2_bias;
    Mat<S> ff1_weight, ff1_bias, ff2_weight, ff2_bias;
};

template <typename S>
struct EncoderParams {
    std::vector<ConvBlockParams<S>> static_blocks;
    std::vector<ConvBlockParams<S>> motion_blocks;
    Mat<S> fusion_query;  // 1 x d
    Mat<S> fusion_proj;   // d x d
    Mat<S> cls_token;     // 1 x d
    std::vector<TransformerLayerParams<S>> layers;
    Mat<S> final_ln_gain, final_ln_bias;
};

namespace detail {

template <typename P, typename F>
void visit_conv_block(P& block, const std::string& prefix, F& f) {
    for (std::size_t i = 0; i < block.layers.size(); ++i) {
        const std::string p = prefix + ".conv" + std::to_string(i);
        f(p + ".weight", block.layers[i].weight);
        f(p + ".bias", block.layers[i].bias);
    }
    f(prefix + ".proj.weight", block.proj_weight);
    f(prefix + ".proj.bias", block.proj_bias);
}

}  // namespace detail

// Visits every parameter tensor in a fixed order with a stable name. `P` may be
// const-qualified.
template <typename P, typename F>
void visit_params(P& params, const EncoderConfig& cfg, F&& f) {
    for (std::size_t k = 0; k < params.static_blocks.size(); ++k) {
        detail::visit_conv_block(params.static_blocks[k], "static." + cfg.groups[k].name, f);
    }
    for (std::size_t k = 0; k < params.motion_blocks.size(); ++k) {
        detail::visit_conv_block(params.motion_blocks[k], "motion." + cfg.groups[k].name, f);
    }
    f(std::string("fusion.query"), params.fusion_query);
    f(std::string("fusion.proj"), params.fusion_proj);
    f(std::string("cls_token"), params.cls_token);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& L = params.layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        f(p + "ln1.gain", L.ln1_gain);
        f(p + "ln1.bias", L.ln1_bias);
        f(p + "attn.wq", L.wq);
        f(p + "attn.bq", L.bq);
        f(p + "attn.wk", L.wk);
        f(p + "attn.bk", L.bk);
        f(p + "attn.wv", L.wv);
        f(p + "attn.bv", L.bv);
        f(p + "attn.wo", L.wo);
        f(p + "attn.bo", L.bo);
        f(p + "ln2.gain", L.ln2_gain);
        f(p + "ln2.bias", L.ln2_bias);
        f(p + "ff1.weight", L.ff1_weight);
        f(p + "ff1.bias", L.ff1_bias);
        f(p + "ff2.weight", L.ff2_weight);
        f(p + "ff2.bias", L.ff2_bias);
    }
    f(std::string("final_ln.gain"), params.final_ln_gain);
    f(std::string("final_ln.bias"), params.final_ln_bias);
}

template <typename S>
std::vector<Mat<S>*> param_list(EncoderParams<S>& p, const EncoderConfig& cfg) {
    std::vector<Mat<S>*> out;
    visit_params(p, cfg, [&](const std::string&, Mat<S>& m) { out.push_back(&m); });
    return out;
}

template <typename S>
std::size_t param_count(const EncoderParams<S>& p, const EncoderConfig& cfg) {
    std::size_t n = 0;
    visit_params(p, cfg, [&](const std::string&, const Mat<S>& m) { n += m.size(); });
    return n;
}

// Every tensor shaped for `cfg`; weights zero, normalization gains one.
template <typename S>
EncoderParams<S> shaped_params(const EncoderConfig& cfg) {
    cfg.validate();
    const int d = cfg.d_model;
    const int kz = cfg.kernel_size;
    EncoderParams<S> p;
    auto make_block = [&](int d_in) {
        ConvBlockParams<S> b;
        int in = d_in;
        for (std::size_t i = 0; i < cfg.dilations.size(); ++i) {
            b.layers.push_back({Mat<S>::Zero(kz * in, d), Mat<S>::Zero(1, d)});
            in = d;
        }
        b.proj_weight = Mat<S>::Zero(d_in, d);
        b.proj_bias = Mat<S>::Zero(1, d);
        return b;
    };
    for (const auto& g : cfg.groups) {
        p.static_blocks.push_back(make_block(g.dim));
        p.motion_blocks.push_back(make_block(g.dim));
    }
    p.fusion_query = Mat<S>::Zero(1, d);
    p.fusion_proj = Mat<S>::Zero(d, d);
    p.cls_token = Mat<S>::Zero(1, d);
    const int ff = cfg.ffn_multiplier * d;
    for (int l = 0; l < cfg.num_layers; ++l) {
        TransformerLayerParams<S> L;
        L.ln1_gain = Mat<S>::Ones(1, d);
        L.ln1_bias = Mat<S>::Zero(1, d);
        L.wq = Mat<S>::Zero(d, d);
        L.bq = Mat<S>::Zero(1, d);
        L.wk = Mat<S>::Zero(d, d);
        L.bk = Mat<S>::Zero(1, d);
        L.wv = Mat<S>::Zero(d, d);
        L.bv = Mat<S>::Zero(1, d);
        L.wo = Mat<S>::Zero(d, d);
        L.bo = Mat<S>::Zero(1, d);
        L.ln2_gain = Mat<S>::Ones(1, d);
        L.ln2_bias = Mat<S>::Zero(1, d);
        L.ff1_weight = Mat<S>::Zero(d, ff);
        L.ff1_bias = Mat<S>::Zero(1, ff);
        L.ff2_weight = Mat<S>::Zero(ff, d);
        L.ff2_bias = Mat<S>::Zero(1, d);
        p.layers.push_back(std::move(L));
    }
    p.final_ln_gain = Mat<S>::Ones(1, d);
    p.final_ln_bias = Mat<S>::Zero(1, d);
    return p;
}

template <typename S>
EncoderParams<S> zeros_like(const EncoderParams<S>& src, const EncoderConfig& cfg) {
    EncoderParams<S> out = src;
    visit_params(out, cfg, [](const std::string&, Mat<S>& m) { m.setZero(); });
    return out;
}

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero, norm gains one,
// CLS token ~ N(0, 0.02^2).
template <typename S>
EncoderParams<S> init_params(const EncoderConfig& cfg) {
    EncoderParams<S> p = shaped_params<S>(cfg);
    std::mt19937_64 rng(cfg.seed);
    auto fill_uniform = [&](Mat<S>& m, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = S(u(rng));
    };
    auto init_block = [&](ConvBlockParams<S>& b) {
        for (auto& l : b.layers) fill_uniform(l.weight, static_cast<int>(l.weight.rows()));
        fill_uniform(b.proj_weight, static_cast<int>(b.proj_weight.rows()));
    };
    for (auto& b : p.static_blocks) init_block(b);
    for (auto& b : p.motion_blocks) init_block(b);
    fill_uniform(p.fusion_query, cfg.d_model);
    fill_uniform(p.fusion_proj, cfg.d_model);
    std::normal_distribution<double> gauss(0.0, 0.02);
    for (Eigen::Index i = 0; i < p.cls_token.size(); ++i) p.cls_token.data()[i] = S(gauss(rng));
    for (auto& L : p.layers) {
        fill_uniform(L.wq, cfg.d_model);
        fill_uniform(L.wk, cfg.d_model);
        fill_uniform(L.wv, cfg.d_model);
        fill_uniform(L.wo, cfg.d_model);
        fill_uniform(L.ff1_weight, cfg.d_model);
        fill_uniform(L.ff2_weight, cfg.ffn_multiplier * cfg.d_model);
    }
    return p;
}

template <typename To, typename From>
EncoderParams<To> cast_params(const EncoderParams<From>& src, const EncoderConfig& cfg) {
    EncoderParams<To> out = shaped_params<To>(cfg);
    std::vector<const Mat<From>*> from;
    visit_params(src, cfg, [&](const std::string&, const Mat<From>& m) { from.push_back(&m); });
    std::size_t i = 0;
    visit_params(out, cfg, [&](const std::string& name, Mat<To>& m) {
        if (i >= from.size() || from[i]->rows() != m.rows() || from[i]->cols() != m.cols()) {
            throw ValidationError("cast_params: shape mismatch at " + name);
        }
        m = from[i++]->template cast<To>();
    });
    return out;
}

template <typename S>
bool all_finite(const EncoderParams<S>& p, const EncoderConfig& cfg) {
    bool ok = true;
    visit_params(p, cfg, [&](const std::string&, const Mat<S>& m) { ok = ok && m.allFinite(); });
    return ok;
}

// ---------------------------------------------------------------------------
// Conv block

template <typename S>
struct ConvBlockCache {
    Mat<S> input;
    std::vector<Mat<S>> cols;  // im2col of each layer's input
    std::vector<Mat<S>> pre;   // pre-activation
};

// Each layer: dilated same-length convolution, activation, residual add. The
// first layer's residual goes through a 1x1 projection since d_in != d.
template <typename S>
Mat<S> conv_block(const Mat<S>& x, const ConvBlockParams<S>& p, const EncoderConfig& cfg,
                  ConvBlockCache<S>* cache = nullptr) {
    if (p.layers.size() != cfg.dilations.size()) {
        throw ValidationError("conv_block: layer count does not match dilations");
    }
    if (x.cols() != p.proj_weight.rows()) {
        std::ostringstream os;
        os << "conv_block: input has " << x.cols() << " channels, block expects "
           << p.proj_weight.rows();
        throw ValidationError(os.str());
    }
    if (cache) {
        cache->input = x;
        cache->cols.clear();
        cache->pre.clear();
    }
    Mat<S> h = x;
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        Mat<S> cols = nn::im2col(h, cfg.kernel_size, cfg.dilations[i]);
        Mat<S> pre = nn::linear(cols, p.layers[i].weight, p.layers[i].bias);
        Mat<S> out = nn::activate(pre, cfg.activation);
        if (i == 0) {
            out += nn::linear(x, p.proj_weight, p.proj_bias);
        } else {
            out += h;
        }
        if (cache) {
            cache->cols.push_back(std::move(cols));
            cache->pre.push_back(std::move(pre));
        }
        h = std::move(out);
    }
    return h;
}

template <typename S>
Mat<S> conv_block_backward(const ConvBlockParams<S>& p, const EncoderConfig& cfg,
                           const ConvBlockCache<S>& c, const Mat<S>& dy, ConvBlockParams<S>& g,
                           bool need_input_grad = false) {
    Mat<S> dh = dy;
    const int n = static_cast<int>(p.layers.size());
    Mat<S> dx;
    for (int i = n - 1; i >= 0; --i) {
        const Mat<S> dpre = nn::activate_backward(c.pre[i], dh, cfg.activation);
        const bool first = (i == 0);
        const bool want_cols = !first || need_input_grad;
        Mat<S> dcols = nn::linear_backward(c.cols[i], p.layers[i].weight, dpre, g.layers[i].weight,
                                           g.layers[i].bias, want_cols);
        if (first) {
            Mat<S> dres = nn::linear_backward(c.input, p.proj_weight, dh, g.proj_weight, g.proj_bias,
                                              need_input_grad);
            if (need_input_grad) {
                dx = nn::col2im(dcols, static_cast<int>(c.input.cols()), cfg.kernel_size,
                                cfg.dilations[0]);
                dx += dres;
            }
        } else {
            const int d_in = static_cast<int>(p.layers[i].weight.rows()) / cfg.kernel_size;
            Mat<S> dprev = nn::col2im(dcols, d_in, cfg.kernel_size, cfg.dilations[i]);
            dprev += dh;
            dh = std::move(dprev);
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Attention fusion across input groups

template <typename S>
struct FusionCache {
    std::vector<Mat<S>> inputs;  // K matrices, T x d
    Mat<S> alpha;                // T x K
    Mat<S> key;                  // 1 x d, q^T W_a
};

// alpha_{k,t} = softmax_k(q^T W_a e_{k,t} / sqrt(d)); f_t = sum_k alpha_{k,t} e_{k,t}.
template <typename S>
Mat<S> fuse(const std::vector<Mat<S>>& e, const Mat<S>& query, const Mat<S>& proj, Mat<S>* alpha_out,
            FusionCache<S>* cache = nullptr) {
    if (e.empty()) throw ValidationError("fuse: no inputs");
    const int T = static_cast<int>(e[0].rows());
    const int d = static_cast<int>(e[0].cols());
    const int K = static_cast<int>(e.size());
    const Mat<S> key = query * proj;  // (W_a^T q)^T
    const S scale = S(1) / std::sqrt(S(d));
    Mat<S> logits(T, K);
    for (int k = 0; k < K; ++k) logits.col(k) = (e[k] * key.transpose()) * scale;
    Mat<S> alpha = nn::softmax_rows(logits);
    Mat<S> f = Mat<S>::Zero(T, d);
    for (int k = 0; k < K; ++k) f += (e[k].array().colwise() * alpha.col(k).array()).matrix();
    if (alpha_out) *alpha_out = alpha;
    if (cache) {
        cache->inputs = e;
        cache->alpha = std::move(alpha);
        cache->key = key;
    }
    return f;
}

template <typename S>
std::vector<Mat<S>> fuse_backward(const FusionCache<S>& c, const Mat<S>& query, const Mat<S>& proj,
                                  const Mat<S>& df, Mat<S>& dquery, Mat<S>& dproj) {
    const int K = static_cast<int>(c.inputs.size());
    const int T = static_cast<int>(df.rows());
    const int d = static_cast<int>(df.cols());
    const S scale = S(1) / std::sqrt(S(d));
    Mat<S> dalpha(T, K);
    for (int k = 0; k < K; ++k) dalpha.col(k) = (c.inputs[k].array() * df.array()).rowwise().sum();
    const Mat<S> dlogits = nn::softmax_rows_backward(c.alpha, dalpha);
    Mat<S> dkey = Mat<S>::Zero(1, d);
    std::vector<Mat<S>> de(K);
    for (int k = 0; k < K; ++k) {
        de[k] = (df.array().colwise() * c.alpha.col(k).array()).matrix();
        de[k] += (dlogits.col(k) * c.key) * scale;
        dkey += (dlogits.col(k).transpose() * c.inputs[k]) * scale;
    }
    dquery += dkey * proj.transpose();
    dproj += query.transpose() * dkey;
    return de;
}

// ---------------------------------------------------------------------------
// CLS-token transformer aggregation (pre-norm layers, final norm, l2 output)

template <typename S>
struct TransformerLayerCache {
    Mat<S> x_in;
    nn::LayerNormCache<S> ln1;
    Mat<S> a;
    Mat<S> q, k, v;
    std::vector<Mat<S>> probs;
    Mat<S> heads;
    Mat<S> x_mid;
    nn::LayerNormCache<S> ln2;
    Mat<S> b;
    Mat<S> h_pre, h_act;
};

template <typename S>
struct AggregateCache {
    std::vector<TransformerLayerCache<S>> layers;
    nn::LayerNormCache<S> final_ln;
    Mat<S> z;
    Eigen::Matrix<S, Eigen::Dynamic, 1> norms;
};

template <typename S>
Mat<S> transformer_layer(const Mat<S>& x, const TransformerLayerParams<S>& L, const EncoderConfig& cfg,
                         TransformerLayerCache<S>* c) {
    const int N = static_cast<int>(x.rows());
    const int d = cfg.d_model;
    const int H = cfg.num_heads;
    const int dh = d / H;
    nn::LayerNormCache<S> ln1;
    Mat<S> a = nn::layer_norm(x, L.ln1_gain, L.ln1_bias, &ln1);
    Mat<S> q = nn::linear(a, L.wq, L.bq);
    Mat<S> k = nn::linear(a, L.wk, L.bk);
    Mat<S> v = nn::linear(a, L.wv, L.bv);
    const S scale = S(1) / std::sqrt(S(dh));
    Mat<S> heads(N, d);
    std::vector<Mat<S>> probs(H);
    for (int h = 0; h < H; ++h) {
        Mat<S> scores = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
        probs[h] = nn::softmax_rows(scores);
        heads.middleCols(h * dh, dh).noalias() = probs[h] * v.middleCols(h * dh, dh);
    }
    Mat<S> x_mid = x + nn::linear(heads, L.wo, L.bo);
    nn::LayerNormCache<S> ln2;
    Mat<S> b = nn::layer_norm(x_mid, L.ln2_gain, L.ln2_bias, &ln2);
    Mat<S> h_pre = nn::linear(b, L.ff1_weight, L.ff1_bias);
    Mat<S> h_act = nn::activate(h_pre, cfg.activation);
    Mat<S> out = x_mid + nn::linear(h_act, L.ff2_weight, L.ff2_bias);
    if (c) {
        c->x_in = x;
        c->ln1 = std::move(ln1);
        c->a = std::move(a);
        c->q = std::move(q);
        c->k = std::move(k);
        c->v = std::move(v);
        c->probs = std::move(probs);
        c->heads = std::move(heads);
        c->x_mid = std::move(x_mid);
        c->ln2 = std::move(ln2);
        c->b = std::move(b);
        c->h_pre = std::move(h_pre);
        c->h_act = std::move(h_act);
    }
    return out;
}

template <typename S>
Mat<S> transformer_layer_backward(const TransformerLayerParams<S>& L, const EncoderConfig& cfg,
                                  const TransformerLayerCache<S>& c, const Mat<S>& dout,
                                  TransformerLayerParams<S>& g) {
    const int N = static_cast<int>(dout.rows());
    const int d = cfg.d_model;
    const int H = cfg.num_heads;
    const int dh = d / H;
    // feed-forward branch
    Mat<S> dh_act = nn::linear_backward(c.h_act, L.ff2_weight, dout, g.ff2_weight, g.ff2_bias);
    Mat<S> dh_pre = nn::activate_backward(c.h_pre, dh_act, cfg.activation);
    Mat<S> db = nn::linear_backward(c.b, L.ff1_weight, dh_pre, g.ff1_weight, g.ff1_bias);
    Mat<S> dx_mid = dout + nn::layer_norm_backward(c.ln2, L.ln2_gain, db, g.ln2_gain, g.ln2_bias);
    // attention branch
    Mat<S> dheads = nn::linear_backward(c.heads, L.wo, dx_mid, g.wo, g.bo);
    const S scale = S(1) / std::sqrt(S(dh));
    Mat<S> dq(N, d), dk(N, d), dv(N, d);
    for (int h = 0; h < H; ++h) {
        const auto dO = dheads.middleCols(h * dh, dh);
        const Mat<S> dP = dO * c.v.middleCols(h * dh, dh).transpose();
        dv.middleCols(h * dh, dh).noalias() = c.probs[h].transpose() * dO;
        const Mat<S> dS = nn::softmax_rows_backward(c.probs[h], dP) * scale;
        dq.middleCols(h * dh, dh).noalias() = dS * c.k.middleCols(h * dh, dh);
        dk.middleCols(h * dh, dh).noalias() = dS.transpose() * c.q.middleCols(h * dh, dh);
    }
    Mat<S> da = nn::linear_backward(c.a, L.wq, dq, g.wq, g.bq);
    da += nn::linear_backward(c.a, L.wk, dk, g.wk, g.bk);
    da += nn::linear_backward(c.a, L.wv, dv, g.wv, g.bv);
    return dx_mid + nn::layer_norm_backward(c.ln1, L.ln1_gain, da, g.ln1_gain, g.ln1_bias);
}

// Prepends CLS, adds sinusoidal positions, runs the transformer and
// l2-normalizes all T+1 outputs. Row 0 is z_cls, rows 1..T are the frames.
template <typename S>
Mat<S> aggregate(const Mat<S>& frames, const EncoderParams<S>& p, const EncoderConfig& cfg,
                 AggregateCache<S>* cache = nullptr) {
    const int T = static_cast<int>(frames.rows());
    const int d = cfg.d_model;
    if (T < 1) throw ValidationError("aggregate: empty window");
    if (frames.cols() != d) throw ValidationError("aggregate: frame width does not match d_model");
    Mat<S> x(T + 1, d);
    x.row(0) = p.cls_token.row(0);
    x.bottomRows(T) = frames;
    x += nn::sinusoidal_positions<S>(T + 1, d);
    if (cache) cache->layers.assign(p.layers.size(), {});
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        x = transformer_layer(x, p.layers[l], cfg, cache ? &cache->layers[l] : nullptr);
    }
    nn::LayerNormCache<S> fln;
    Mat<S> y = nn::layer_norm(x, p.final_ln_gain, p.final_ln_bias, &fln);
    Eigen::Matrix<S, Eigen::Dynamic, 1> norms;
    Mat<S> z = nn::l2_normalize_rows(y, norms);
    if (cache) {
        cache->final_ln = std::move(fln);
        cache->z = z;
        cache->norms = std::move(norms);
    }
    return z;
}

// Returns the gradient w.r.t. the fused frame sequence.
template <typename S>
Mat<S> aggregate_backward(const EncoderParams<S>& p, const EncoderConfig& cfg, const AggregateCache<S>& c,
                          const Mat<S>& dz, EncoderParams<S>& g) {
    Mat<S> dy = nn::l2_normalize_rows_backward(c.z, c.norms, dz);
    Mat<S> dx = nn::layer_norm_backward(c.final_ln, p.final_ln_gain, dy, g.final_ln_gain, g.final_ln_bias);
    for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
        dx = transformer_layer_backward(p.layers[l], cfg, c.layers[l], dx, g.layers[l]);
    }
    g.cls_token.row(0) += dx.row(0);
    return dx.bottomRows(dx.rows() - 1);
}

// ---------------------------------------------------------------------------
// Whole encoder

template <typename S>
struct EncoderCache {
    std::vector<ConvBlockCache<S>> static_blocks;
    std::vector<ConvBlockCache<S>> motion_blocks;
    FusionCache<S> fusion;
    AggregateCache<S> aggregate;
};

template <typename S>
struct EncoderOutput {
    Mat<S> z;      // (T+1) x d, unit rows; row 0 is CLS
    Mat<S> alpha;  // T x K fusion weights
};

inline void check_encoder_input(const EncoderConfig& cfg, Eigen::Index rows, Eigen::Index s_cols,
                                Eigen::Index m_cols) {
    std::vector<std::string> bad;
    for (const auto& g : cfg.groups) {
        if (g.offset + g.dim > s_cols || g.offset + g.dim > m_cols) bad.push_back(g.name);
    }
    if (!bad.empty()) {
        std::string msg = "encoder input too narrow for group(s):";
        for (const auto& b : bad) msg += " " + b;
        throw ValidationError(msg);
    }
    if (rows < 1) throw ValidationError("encoder input has no frames");
}

// e_{k,t} = phi_static^k(s)_t + phi_motion^k(u)_t, fused per frame, then aggregated.
template <typename S>
EncoderOutput<S> encoder_forward(const EncoderParams<S>& p, const EncoderConfig& cfg,
                                 const Mat<S>& static_in, const Mat<S>& motion_in,
                                 EncoderCache<S>* cache = nullptr) {
    check_encoder_input(cfg, static_in.rows(), static_in.cols(), motion_in.cols());
    if (static_in.rows() != motion_in.rows()) {
        throw ValidationError("encoder: static and motion inputs differ in length");
    }
    const int K = cfg.num_groups();
    if (cache) {
        cache->static_blocks.assign(K, {});
        cache->motion_blocks.assign(K, {});
    }
    std::vector<Mat<S>> e(K);
    for (int k = 0; k < K; ++k) {
        const auto& g = cfg.groups[k];
        const Mat<S> s = static_in.middleCols(g.offset, g.dim);
        const Mat<S> u = motion_in.middleCols(g.offset, g.dim);
        e[k] = conv_block(s, p.static_blocks[k], cfg, cache ? &cache->static_blocks[k] : nullptr);
        e[k] += conv_block(u, p.motion_blocks[k], cfg, cache ? &cache->motion_blocks[k] : nullptr);
    }
    EncoderOutput<S> out;
    const Mat<S> f = fuse(e, p.fusion_query, p.fusion_proj, &out.alpha, cache ? &cache->fusion : nullptr);
    out.z = aggregate(f, p, cfg, cache ? &cache->aggregate : nullptr);
    return out;
}

// Accumulates parameter gradients for an upstream gradient on z.
template <typename S>
void encoder_backward(const EncoderParams<S>& p, const EncoderConfig& cfg, const EncoderCache<S>& c,
                      const Mat<S>& dz, EncoderParams<S>& g) {
    const Mat<S> df = aggregate_backward(p, cfg, c.aggregate, dz, g);
    const auto de = fuse_backward(c.fusion, p.fusion_query, p.fusion_proj, df, g.fusion_query, g.fusion_proj);
    for (int k = 0; k < cfg.num_groups(); ++k) {
        conv_block_backward(p.static_blocks[k], cfg, c.static_blocks[k], de[k], g.static_blocks[k]);
        conv_block_backward(p.motion_blocks[k], cfg, c.motion_blocks[k], de[k], g.motion_blocks[k]);
    }
}

// ---------------------------------------------------------------------------
// Window-level API

struct WindowEmbedding {
    Vector cls;           // unit norm
    RowMatrix frames;     // T x d, unit rows
    RowMatrix attention;  // T x K fusion weights
    std::string video_id;
    int start_frame = 0;
    std::optional<std::string> label;
};

// Casts a window matrix to the encoder scalar, zeroing masked groups.
template <typename S>
Mat<S> encoder_input(const RowMatrix& m, const EncoderConfig& cfg, const std::vector<std::string>& masked) {
    Mat<S> out = m.cast<S>();
    for (const auto& name : masked) {
        const auto& g = cfg.groups[cfg.group_index(name)];
        out.middleCols(g.offset, g.dim).setZero();
    }
    return out;
}

template <typename S>
WindowEmbedding encode_window(const TemporalWindow& w, const EncoderParams<S>& p, const EncoderConfig& cfg,
                              const std::vector<std::string>& masked = {}) {
    const auto out = encoder_forward(p, cfg, encoder_input<S>(w.static_features, cfg, masked),
                                     encoder_input<S>(w.motion, cfg, masked));
    WindowEmbedding emb;
    emb.cls = out.z.row(0).transpose().template cast<double>();
    emb.frames = out.z.bottomRows(out.z.rows() - 1).template cast<double>();
    emb.attention = out.alpha.template cast<double>();
    emb.video_id = w.video_id;
    emb.start_frame = w.start_frame;
    emb.label = w.label;
    return emb;
}

struct AttentionReport {
    std::vector<std::string> groups;
    Vector overall;
    std::map<std::string, Vector> per_class;
    std::map<std::string, long> frames_per_class;
    long frames = 0;
};

// Mean fusion weight per group over all frames, overall and per labelled class.
inline AttentionReport attention_report(const std::vector<WindowEmbedding>& embeddings,
                                        const EncoderConfig& cfg) {
    if (embeddings.empty()) throw ValidationError("attention_report: no windows");
    AttentionReport r;
    for (const auto& g : cfg.groups) r.groups.push_back(g.name);
    const int K = cfg.num_groups();
    r.overall = Vector::Zero(K);
    for (const auto& e : embeddings) {
        if (e.attention.cols() != K) throw ValidationError("attention_report: group count mismatch");
        const Vector sum = e.attention.colwise().sum().transpose();
        r.overall += sum;
        r.frames += e.attention.rows();
        if (e.label) {
            auto [it, inserted] = r.per_class.try_emplace(*e.label, Vector::Zero(K));
            it->second += sum;
            r.frames_per_class[*e.label] += e.attention.rows();
        }
    }
    r.overall /= static_cast<double>(r.frames);
    for (auto& [label, v] : r.per_class) v /= static_cast<double>(r.frames_per_class[label]);
    return r;
}

template <typename S>
AttentionReport attention_report(const std::vector<TemporalWindow>& windows, const EncoderParams<S>& p,
                                 const EncoderConfig& cfg) {
    if (windows.empty()) throw ValidationError("attention_report: no windows");
    std::vector<WindowEmbedding> emb;
    emb.reserve(windows.size());
    for (const auto& w : windows) emb.push_back(encode_window(w, p, cfg));
    return attention_report(emb, cfg);
}

}  // namespace actman
