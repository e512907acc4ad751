// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// Feature containers: `<video_id>.manifest.json` describing named arrays in a
// little-endian float32 blob `<video_id>.f32`, plus a CSV dataset index.

#pragma once

#include "actman/common.hpp"
#include "actman/features.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace actman {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kFeatureFormatVersion = 1;

// ---- little-endian float32 blobs -------------------------------------------

inline void append_f32(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xffU));
}

inline float read_f32(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
    return std::bit_cast<float>(bits);
}

inline void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing " + path.string());
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline json read_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
    if (!os) throw IoError("failed writing " + path.string());
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw IoError("failed writing " + path.string());
}

// ---- array descriptors ------------------------------------------------------

struct ArrayDescriptor {
    std::string name;
    std::string dtype = "float32";
    std::vector<std::int64_t> shape;
    std::uint64_t offset = 0;  // bytes
    std::uint64_t length = 0;  // bytes

    std::uint64_t elements() const {
        std::uint64_t n = 1;
        for (auto s : shape) n *= static_cast<std::uint64_t>(s);
        return n;
    }
};

inline json to_json(const ArrayDescriptor& a) {
    return json{{"name", a.name}, {"dtype", a.dtype}, {"shape", a.shape}, {"offset", a.offset}, {"length", a.length}};
}

inline ArrayDescriptor descriptor_from_json(const json& j) {
    ArrayDescriptor a;
    try {
        a.name = j.at("name").get<std::string>();
        a.dtype = j.at("dtype").get<std::string>();
        a.shape = j.at("shape").get<std::vector<std::int64_t>>();
        a.offset = j.at("offset").get<std::uint64_t>();
        a.length = j.at("length").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed array descriptor: ") + e.what());
    }
    if (a.dtype != "float32") throw ValidationError("array '" + a.name + "': unsupported dtype " + a.dtype);
    for (auto s : a.shape) {
        if (s < 0) throw ValidationError("array '" + a.name + "': negative dimension");
    }
    if (a.length != 4 * a.elements()) {
        throw ValidationError("array '" + a.name + "': byte length does not match its shape");
    }
    return a;
}

// Non-overlapping, contiguous coverage of exactly `file_size` bytes.
inline void check_layout(std::vector<ArrayDescriptor> arrays, std::uint64_t file_size, const std::string& what) {
    std::sort(arrays.begin(), arrays.end(), [](const auto& a, const auto& b) { return a.offset < b.offset; });
    std::uint64_t end = 0;
    for (const auto& a : arrays) {
        if (a.offset < end) throw ValidationError(what + ": array '" + a.name + "' overlaps another array");
        end = a.offset + a.length;
    }
    std::uint64_t total = 0;
    for (const auto& a : arrays) total += a.length;
    if (end > file_size) throw IoError(what + ": data file truncated (" + std::to_string(file_size) +
                                       " bytes, manifest needs " + std::to_string(end) + ")");
    if (total != file_size) {
        throw ValidationError(what + ": manifest covers " + std::to_string(total) + " bytes but data file has " +
                              std::to_string(file_size));
    }
}

// ---- feature sequences ------------------------------------------------------

inline fs::path manifest_path(const fs::path& dir, const std::string& video_id) {
    return dir / (video_id + ".manifest.json");
}

inline std::vector<ArrayDescriptor> feature_layout(std::int64_t frames) {
    std::vector<ArrayDescriptor> arrays{
        {"pose", "float32", {frames, kNumJoints, 3, 3}, 0, 0},
        {"global_orient", "float32", {frames, 3, 3}, 0, 0},
        {"shape", "float32", {frames, kShapeDim}, 0, 0},
        {"keypoints", "float32", {frames, kNumKeypoints, 2}, 0, 0},
        {"visual", "float32", {frames, kVisualDim}, 0, 0},
    };
    std::uint64_t off = 0;
    for (auto& a : arrays) {
        a.offset = off;
        a.length = 4 * a.elements();
        off += a.length;
    }
    return arrays;
}

// Writes the manifest and data file into `dir`; returns the manifest path.
inline fs::path write_features(const FeatureSequence& seq, const fs::path& dir) {
    validate(seq);
    fs::create_directories(dir);
    const auto frames = static_cast<std::int64_t>(seq.frames.size());
    const auto arrays = feature_layout(frames);
    std::vector<unsigned char> blob;
    blob.reserve(arrays.back().offset + arrays.back().length);
    for (const auto& f : seq.frames)
        for (const auto& r : f.pose)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) append_f32(blob, r(i, j));
    for (const auto& f : seq.frames)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) append_f32(blob, f.global_orient(i, j));
    for (const auto& f : seq.frames)
        for (int i = 0; i < kShapeDim; ++i) append_f32(blob, f.shape(i));
    for (const auto& f : seq.frames)
        for (int i = 0; i < kNumKeypoints; ++i)
            for (int j = 0; j < 2; ++j) append_f32(blob, f.keypoints(i, j));
    for (const auto& f : seq.frames)
        for (int i = 0; i < kVisualDim; ++i) append_f32(blob, f.visual(i));

    const std::string data_name = seq.video_id + ".f32";
    json manifest{{"format", "actman-features"},
                  {"format_version", kFeatureFormatVersion},
                  {"video_id", seq.video_id},
                  {"label", seq.label ? json(*seq.label) : json(nullptr)},
                  {"subject_id", seq.subject_id ? json(*seq.subject_id) : json(nullptr)},
                  {"fps", seq.fps},
                  {"num_frames", frames},
                  {"data_file", data_name},
                  {"arrays", json::array()}};
    for (const auto& a : arrays) manifest["arrays"].push_back(to_json(a));
    write_bytes(dir / data_name, blob);
    const auto mpath = manifest_path(dir, seq.video_id);
    write_json(mpath, manifest);
    return mpath;
}

inline FeatureSequence read_features(const fs::path& manifest_file) {
    const json m = read_json(manifest_file);
    const std::string what = manifest_file.filename().string();
    FeatureSequence seq;
    std::int64_t frames = 0;
    std::string data_name;
    std::vector<ArrayDescriptor> arrays;
    try {
        if (m.at("format_version").get<int>() != kFeatureFormatVersion) {
            throw ValidationError(what + ": unsupported format_version");
        }
        seq.video_id = m.at("video_id").get<std::string>();
        seq.fps = m.at("fps").get<double>();
        frames = m.at("num_frames").get<std::int64_t>();
        data_name = m.at("data_file").get<std::string>();
        if (m.contains("label") && !m["label"].is_null()) seq.label = m["label"].get<std::string>();
        if (m.contains("subject_id") && !m["subject_id"].is_null()) seq.subject_id = m["subject_id"].get<std::string>();
        for (const auto& a : m.at("arrays")) arrays.push_back(descriptor_from_json(a));
    } catch (const json::exception& e) {
        throw ValidationError(what + ": " + e.what());
    }
    if (frames < 1) throw ValidationError(what + ": num_frames must be positive");

    const auto expected = feature_layout(frames);
    std::map<std::string, const ArrayDescriptor*> by_name;
    for (const auto& a : arrays) {
        if (!by_name.emplace(a.name, &a).second) throw ValidationError(what + ": duplicate array '" + a.name + "'");
    }
    for (const auto& e : expected) {
        auto it = by_name.find(e.name);
        if (it == by_name.end()) throw ValidationError(what + ": missing array '" + e.name + "'");
        if (it->second->shape != e.shape) {
            std::ostringstream os;
            os << what << ": array '" << e.name << "' has shape [";
            for (std::size_t i = 0; i < it->second->shape.size(); ++i) os << (i ? "," : "") << it->second->shape[i];
            os << "], expected [";
            for (std::size_t i = 0; i < e.shape.size(); ++i) os << (i ? "," : "") << e.shape[i];
            os << "]";
            throw ValidationError(os.str());
        }
    }
    if (arrays.size() != expected.size()) throw ValidationError(what + ": unexpected extra arrays");

    const fs::path data_path = manifest_file.parent_path() / data_name;
    if (!fs::exists(data_path)) throw IoError(what + ": data file " + data_path.string() + " not found");
    const auto blob = read_bytes(data_path);
    check_layout(arrays, blob.size(), what);

    seq.frames.resize(frames);
    auto at = [&](const std::string& name) { return blob.data() + by_name.at(name)->offset; };
    const unsigned char* p = at("pose");
    for (auto& f : seq.frames)
        for (auto& r : f.pose)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j, p += 4) r(i, j) = read_f32(p);
    p = at("global_orient");
    for (auto& f : seq.frames)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j, p += 4) f.global_orient(i, j) = read_f32(p);
    p = at("shape");
    for (auto& f : seq.frames)
        for (int i = 0; i < kShapeDim; ++i, p += 4) f.shape(i) = read_f32(p);
    p = at("keypoints");
    for (auto& f : seq.frames)
        for (int i = 0; i < kNumKeypoints; ++i)
            for (int j = 0; j < 2; ++j, p += 4) f.keypoints(i, j) = read_f32(p);
    p = at("visual");
    for (auto& f : seq.frames) {
        f.visual.resize(kVisualDim);
        for (int i = 0; i < kVisualDim; ++i, p += 4) f.visual(i) = read_f32(p);
    }
    validate(seq);
    return seq;
}

// ---- dataset index ------------------------------------------------------------

struct IndexEntry {
    std::string path;  // manifest path relative to the index directory
    std::string label;
    std::string split;
};

inline constexpr const char* kIndexFile = "index.csv";

inline void write_index(const fs::path& dir, const std::vector<IndexEntry>& entries) {
    std::ostringstream os;
    os << "path,label,split\n";
    for (const auto& e : entries) os << e.path << ',' << e.label << ',' << e.split << '\n';
    write_text(dir / kIndexFile, os.str());
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<IndexEntry> read_index(const fs::path& dir) {
    const fs::path path = dir / kIndexFile;
    std::ifstream is(path);
    if (!is) throw IoError("cannot open dataset index " + path.string());
    std::string line;
    if (!std::getline(is, line) || split_csv_line(line) != std::vector<std::string>{"path", "label", "split"}) {
        throw ValidationError(path.string() + ": header must be 'path,label,split'");
    }
    std::vector<IndexEntry> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cols = split_csv_line(line);
        if (cols.size() != 3) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 3 columns");
        out.push_back({cols[0], cols[1], cols[2]});
    }
    return out;
}

// Loads features from a directory: through index.csv when present (optionally
// restricted to one split), otherwise every *.manifest.json in name order.
inline std::vector<FeatureSequence> load_features(const fs::path& dir, const std::string& split = "") {
    if (!fs::is_directory(dir)) throw IoError("feature directory " + dir.string() + " not found");
    std::vector<FeatureSequence> out;
    if (fs::exists(dir / kIndexFile)) {
        for (const auto& e : read_index(dir)) {
            if (!split.empty() && e.split != split) continue;
            auto seq = read_features(dir / e.path);
            if (!e.label.empty()) seq.label = e.label;
            out.push_back(std::move(seq));
        }
    } else {
        std::vector<fs::path> manifests;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            if (name.size() > 14 && name.ends_with(".manifest.json")) manifests.push_back(entry.path());
        }
        std::sort(manifests.begin(), manifests.end());
        for (const auto& m : manifests) out.push_back(read_features(m));
    }
    if (out.empty()) {
        throw ValidationError("no feature sequences found in " + dir.string() +
                              (split.empty() ? std::string() : " for split '" + split + "'"));
    }
    return out;
}

}  // namespace actman
