// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Model checkpoints (`model.json` + `model.f32`) and JSON (de)serialization of
// the configuration structs. Unknown configuration keys are rejected.

#pragma once

#include "actman/encoder.hpp"
#include "actman/io.hpp"
#include "actman/metrics.hpp"
#include "actman/training.hpp"
#include "actman/windows.hpp"

#include <set>
#include <string>
#include <vector>

namespace actman {

inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& section) {
    if (!j.is_object()) throw ValidationError("config section '" + section + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ValidationError("unknown key '" + key + "' in config section '" + section + "'");
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config key '" + section + "." + key + "' has the wrong type");
    }
}

}  // namespace detail

// ---- EncoderConfig ----------------------------------------------------------

inline json to_json(const EncoderConfig& c) {
    json groups = json::array();
    for (const auto& g : c.groups) groups.push_back({{"name", g.name}, {"offset", g.offset}, {"dim", g.dim}});
    return json{{"d_model", c.d_model},
                {"kernel_size", c.kernel_size},
                {"dilations", c.dilations},
                {"num_layers", c.num_layers},
                {"num_heads", c.num_heads},
                {"window", c.window},
                {"ffn_multiplier", c.ffn_multiplier},
                {"activation", std::string(nn::to_string(c.activation))},
                {"seed", c.seed},
                {"groups", groups}};
}

inline void update_from_json(EncoderConfig& c, const json& j) {
    const std::string sec = "encoder";
    detail::reject_unknown(j, {"d_model", "kernel_size", "dilations", "num_layers", "num_heads", "window",
                               "ffn_multiplier", "activation", "seed", "groups"},
                           sec);
    detail::read_opt(j, "d_model", c.d_model, sec);
    detail::read_opt(j, "kernel_size", c.kernel_size, sec);
    detail::read_opt(j, "dilations", c.dilations, sec);
    detail::read_opt(j, "num_layers", c.num_layers, sec);
    detail::read_opt(j, "num_heads", c.num_heads, sec);
    detail::read_opt(j, "window", c.window, sec);
    detail::read_opt(j, "ffn_multiplier", c.ffn_multiplier, sec);
    detail::read_opt(j, "seed", c.seed, sec);
    if (j.contains("activation")) {
        std::string a;
        detail::read_opt(j, "activation", a, sec);
        c.activation = nn::parse_activation(a);
    }
    if (j.contains("groups")) {
        c.groups.clear();
        for (const auto& g : j.at("groups")) {
            detail::reject_unknown(g, {"name", "offset", "dim"}, "encoder.groups");
            InputGroup ig;
            detail::read_opt(g, "name", ig.name, "encoder.groups");
            detail::read_opt(g, "offset", ig.offset, "encoder.groups");
            detail::read_opt(g, "dim", ig.dim, "encoder.groups");
            c.groups.push_back(ig);
        }
    }
}

// ---- WindowConfig -------------------------------------------------------------

inline json to_json(const WindowConfig& c) { return json{{"length", c.length}, {"overlap", c.overlap}}; }

inline void update_from_json(WindowConfig& c, const json& j) {
    detail::reject_unknown(j, {"length", "overlap"}, "window");
    detail::read_opt(j, "length", c.length, "window");
    detail::read_opt(j, "overlap", c.overlap, "window");
}

// ---- TrainConfig ----------------------------------------------------------------

inline json to_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"weight_decay", c.weight_decay},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"lambda", c.lambda},
                {"temperature", c.temperature},
                {"supcon_weight", c.supcon_weight},
                {"severity_min", c.severity_min},
                {"severity_max", c.severity_max},
                {"distorted_per_anchor", c.distorted_per_anchor},
                {"masked_groups", c.masked_groups},
                {"seed", c.seed},
                {"schedule", c.schedule},
                {"validate_each_epoch", c.validate_each_epoch}};
}

inline void update_from_json(TrainConfig& c, const json& j) {
    const std::string sec = "training";
    detail::reject_unknown(j, {"learning_rate", "weight_decay", "batch_size", "epochs", "lambda", "temperature",
                               "supcon_weight", "severity_min", "severity_max", "distorted_per_anchor",
                               "masked_groups", "seed", "schedule", "validate_each_epoch"},
                           sec);
    detail::read_opt(j, "learning_rate", c.learning_rate, sec);
    detail::read_opt(j, "weight_decay", c.weight_decay, sec);
    detail::read_opt(j, "batch_size", c.batch_size, sec);
    detail::read_opt(j, "epochs", c.epochs, sec);
    detail::read_opt(j, "lambda", c.lambda, sec);
    detail::read_opt(j, "temperature", c.temperature, sec);
    detail::read_opt(j, "supcon_weight", c.supcon_weight, sec);
    detail::read_opt(j, "severity_min", c.severity_min, sec);
    detail::read_opt(j, "severity_max", c.severity_max, sec);
    detail::read_opt(j, "distorted_per_anchor", c.distorted_per_anchor, sec);
    detail::read_opt(j, "masked_groups", c.masked_groups, sec);
    detail::read_opt(j, "seed", c.seed, sec);
    detail::read_opt(j, "schedule", c.schedule, sec);
    detail::read_opt(j, "validate_each_epoch", c.validate_each_epoch, sec);
}

// ---- checkpoint ------------------------------------------------------------------

struct Checkpoint {
    EncoderConfig encoder;
    WindowConfig window;
    NormStats norm;
    std::vector<std::string> masked_groups;  // zeroed at input when encoding
    EncoderParams<float> params;
};

inline void save_checkpoint(const Checkpoint& ck, const fs::path& dir) {
    ck.encoder.validate();
    fs::create_directories(dir);
    std::vector<unsigned char> blob;
    json tensors = json::array();
    auto add = [&](const std::string& name, const auto& m, std::int64_t rows, std::int64_t cols) {
        ArrayDescriptor a{name, "float32", {rows, cols}, blob.size(), 0};
        for (Eigen::Index i = 0; i < m.size(); ++i) append_f32(blob, static_cast<double>(m.data()[i]));
        a.length = blob.size() - a.offset;
        tensors.push_back(to_json(a));
    };
    auto& params = const_cast<EncoderParams<float>&>(ck.params);
    visit_params(params, ck.encoder, [&](const std::string& name, Mat<float>& m) {
        add(name, m, m.rows(), m.cols());
    });
    add("norm.mean", ck.norm.mean, 1, ck.norm.mean.size());
    add("norm.std", ck.norm.stddev, 1, ck.norm.stddev.size());
    json manifest{{"format", "actman-checkpoint"},
                  {"format_version", kCheckpointFormatVersion},
                  {"encoder", to_json(ck.encoder)},
                  {"window", to_json(ck.window)},
                  {"norm_std_floor", ck.norm.std_floor},
                  {"masked_groups", ck.masked_groups},
                  {"data_file", "model.f32"},
                  {"tensors", tensors}};
    write_bytes(dir / "model.f32", blob);
    write_json(dir / "model.json", manifest);
}

inline Checkpoint load_checkpoint(const fs::path& dir) {
    const fs::path mpath = dir / "model.json";
    if (!fs::exists(mpath)) throw IoError("checkpoint manifest " + mpath.string() + " not found");
    const json m = read_json(mpath);
    Checkpoint ck;
    std::vector<ArrayDescriptor> arrays;
    std::string data_name;
    try {
        if (m.at("format_version").get<int>() != kCheckpointFormatVersion) {
            throw ValidationError("checkpoint: unsupported format_version");
        }
        update_from_json(ck.encoder, m.at("encoder"));
        update_from_json(ck.window, m.at("window"));
        ck.norm.std_floor = m.at("norm_std_floor").get<double>();
        ck.masked_groups = m.at("masked_groups").get<std::vector<std::string>>();
        data_name = m.at("data_file").get<std::string>();
        for (const auto& a : m.at("tensors")) arrays.push_back(descriptor_from_json(a));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("checkpoint: ") + e.what());
    }
    ck.encoder.validate();
    ck.window.validate();
    const fs::path data_path = dir / data_name;
    if (!fs::exists(data_path)) throw IoError("checkpoint data file " + data_path.string() + " not found");
    const auto blob = read_bytes(data_path);
    check_layout(arrays, blob.size(), "checkpoint");

    std::map<std::string, const ArrayDescriptor*> by_name;
    for (const auto& a : arrays) by_name[a.name] = &a;
    auto find = [&](const std::string& name, std::int64_t rows, std::int64_t cols) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ValidationError("checkpoint: missing tensor '" + name + "'");
        if (it->second->shape != std::vector<std::int64_t>{rows, cols}) {
            throw ValidationError("checkpoint: tensor '" + name + "' has the wrong shape");
        }
        return blob.data() + it->second->offset;
    };
    ck.params = shaped_params<float>(ck.encoder);
    std::size_t used = 0;
    visit_params(ck.params, ck.encoder, [&](const std::string& name, Mat<float>& t) {
        const unsigned char* p = find(name, t.rows(), t.cols());
        for (Eigen::Index i = 0; i < t.size(); ++i, p += 4) t.data()[i] = read_f32(p);
        ++used;
    });
    const auto width = static_cast<std::int64_t>(kStaticMotionDim);
    const unsigned char* pm = find("norm.mean", 1, width);
    const unsigned char* ps = find("norm.std", 1, width);
    ck.norm.mean.resize(width);
    ck.norm.stddev.resize(width);
    for (std::int64_t i = 0; i < width; ++i, pm += 4, ps += 4) {
        ck.norm.mean(i) = read_f32(pm);
        ck.norm.stddev(i) = read_f32(ps);
    }
    if (used + 2 != arrays.size()) throw ValidationError("checkpoint: unexpected extra tensors");
    for (const auto& g : ck.masked_groups) ck.encoder.group_index(g);
    return ck;
}

// ---- centroids ----------------------------------------------------------------------

inline json to_json(const ClassCentroids& c) {
    json classes = json::object();
    for (const auto& [label, v] : c.centroids) {
        classes[label] = {{"count", c.counts.at(label)}, {"centroid", std::vector<double>(v.data(), v.data() + v.size())}};
    }
    return json{{"format", "actman-centroids"}, {"format_version", 1}, {"dim", c.dim()}, {"classes", classes}};
}

inline ClassCentroids centroids_from_json(const json& j) {
    ClassCentroids c;
    try {
        const int dim = j.at("dim").get<int>();
        for (const auto& [label, entry] : j.at("classes").items()) {
            const auto v = entry.at("centroid").get<std::vector<double>>();
            if (static_cast<int>(v.size()) != dim) {
                throw ValidationError("centroid for '" + label + "' has the wrong dimension");
            }
            c.centroids[label] = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
            c.counts[label] = entry.at("count").get<int>();
            if (c.counts[label] < 1) throw ValidationError("centroid for '" + label + "' has no windows");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("centroids: ") + e.what());
    }
    return c;
}

}  // namespace actman
