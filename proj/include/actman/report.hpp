// Copyright (C) 2026 The actman Authors
// SPDX-License-Identifier: Apache-2.0

// CSV / JSON / SVG emitters. CSV columns are fixed per table; JSON documents
// carry a schema name and version.

#pragma once

#include "actman/benchstats.hpp"
#include "actman/io.hpp"
#include "actman/metrics.hpp"
#include "actman/sweep.hpp"
#include "actman/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace actman {

inline constexpr int kReportSchemaVersion = 1;

enum class ReportFormat { csv, json, svg };

inline ReportFormat parse_report_format(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    if (s == "svg") return ReportFormat::svg;
    throw ValidationError("unsupported report format '" + s + "' (expected csv, json or svg)");
}

// Shortest round-tripping decimal for a double.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json schema_header(const std::string& schema) {
    return json{{"schema", schema}, {"schema_version", kReportSchemaVersion}};
}

// ---- scores ---------------------------------------------------------------------

inline std::string scores_csv(const std::vector<VideoScore>& scores) {
    std::ostringstream os;
    os << "video_id,class,s_cons,s_temp,n_windows\n";
    for (const auto& s : scores) {
        os << s.video_id << ',' << s.label << ',' << fmt(s.s_cons) << ',' << fmt(s.s_temp) << ',' << s.windows << '\n';
    }
    return os.str();
}

inline json scores_json(const std::vector<VideoScore>& scores) {
    json j = schema_header("actman-scores");
    j["videos"] = json::array();
    for (const auto& s : scores) {
        j["videos"].push_back(
            {{"video_id", s.video_id}, {"class", s.label}, {"s_cons", s.s_cons}, {"s_temp", s.s_temp}, {"n_windows", s.windows}});
    }
    return j;
}

inline std::vector<VideoScore> scores_from_json(const json& j) {
    std::vector<VideoScore> out;
    for (const auto& v : j.at("videos")) {
        out.push_back({v.at("video_id").get<std::string>(), v.at("class").get<std::string>(),
                       v.at("s_cons").get<double>(), v.at("s_temp").get<double>(), v.at("n_windows").get<int>()});
    }
    return out;
}

// ---- sweep -----------------------------------------------------------------------

inline std::string sweep_csv(const SweepResult& r) {
    std::ostringstream os;
    os << "kind,severity,mean_s_cons,mean_s_temp,n_windows\n";
    for (const auto& row : r.rows) {
        os << row.kind << ',' << fmt(row.severity) << ',' << fmt(row.mean_s_cons) << ',' << fmt(row.mean_s_temp)
           << ',' << row.windows << '\n';
    }
    return os.str();
}

inline json sweep_json(const SweepResult& r, const std::vector<SweepSensitivity>& sens = {}) {
    json j = schema_header("actman-sweep");
    j["rows"] = json::array();
    for (const auto& row : r.rows) {
        j["rows"].push_back({{"kind", row.kind},
                             {"severity", row.severity},
                             {"mean_s_cons", row.mean_s_cons},
                             {"mean_s_temp", row.mean_s_temp},
                             {"n_windows", row.windows}});
    }
    j["spearman"] = json::array();
    for (const auto& s : sens) {
        j["spearman"].push_back({{"kind", s.kind},
                                 {"s_cons", opt_json(s.rho_s_cons)},
                                 {"s_temp", opt_json(s.rho_s_temp)},
                                 {"pooled_s_cons", opt_json(s.pooled_rho_s_cons)},
                                 {"pooled_s_temp", opt_json(s.pooled_rho_s_temp)}});
    }
    return j;
}

inline std::vector<SweepRow> sweep_rows_from_json(const json& j) {
    std::vector<SweepRow> out;
    for (const auto& r : j.at("rows")) {
        out.push_back({r.at("kind").get<std::string>(), r.at("severity").get<double>(), r.at("mean_s_cons").get<double>(),
                       r.at("mean_s_temp").get<double>(), r.at("n_windows").get<int>()});
    }
    return out;
}

// ---- training history ------------------------------------------------------------------

inline std::string history_csv(const TrainHistory& h) {
    std::ostringstream os;
    os << "epoch,total,supcon,hard_negative,learning_rate,val_nmi\n";
    for (const auto& e : h) {
        os << e.epoch << ',' << fmt(e.total) << ',' << fmt(e.supcon) << ',' << fmt(e.hard_negative) << ','
           << fmt(e.learning_rate) << ',' << fmt(e.val_nmi) << '\n';
    }
    return os.str();
}

// ---- study ------------------------------------------------------------------------------

inline std::string mos_csv(const std::vector<MosEntry>& mos) {
    std::ostringstream os;
    os << "video_id,mos,z,n_ratings\n";
    for (const auto& m : mos) os << m.video_id << ',' << fmt(m.mos) << ',' << fmt(m.z) << ',' << m.ratings << '\n';
    return os.str();
}

inline json study_json(const RaterTable& t, const StudyResult& s) {
    auto ids = [&](const std::vector<int>& idx) {
        std::vector<std::string> out;
        for (int i : idx) out.push_back(t.raters[i]);
        return out;
    };
    json j = schema_header("actman-study");
    j["raters"] = t.num_raters();
    j["stages"] = json::array({
        {{"stage", "repeat_consistency"}, {"rejected", s.rejected_repeat}, {"retained", ids(s.after_repeat)}},
        {{"stage", "bt500"}, {"rejected", s.rejected_bt500}, {"retained", ids(s.after_bt500)}},
        {{"stage", "interrater"}, {"rejected", s.rejected_interrater}, {"retained", ids(s.after_interrater)}},
    });
    j["mos"] = json::array();
    for (const auto& m : s.mos) {
        j["mos"].push_back({{"video_id", m.video_id}, {"mos", m.mos}, {"z", m.z}, {"n_ratings", m.ratings}});
    }
    return j;
}

inline std::string convergence_csv(const std::vector<ConvergenceCurve>& curves) {
    std::ostringstream os;
    os << "video_id,n_raters,std\n";
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.stds.size(); ++i) os << c.video_id << ',' << i + 2 << ',' << fmt(c.stds[i]) << '\n';
    }
    return os.str();
}

// ---- SVG line charts ------------------------------------------------------------------------

struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                                  const std::vector<ChartSeries>& series) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw ValidationError("chart series '" + s.name + "' has mismatched lengths");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) throw ValidationError("chart '" + title + "' has no data");
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0;
        const double yv = y0 + (y1 - y0) * i / 5.0;
        os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << fmt(std::round(xv * 1000) / 1000) << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(std::round(yv * 1000) / 1000) << "</text>\n";
        os << "<line x1=\"" << L << "\" y1=\"" << py(yv) << "\" x2=\"" << W - R << "\" y2=\"" << py(yv) << "\" stroke=\"#ddd\"/>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % (sizeof(colors) / sizeof(colors[0]))];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << px(s.x[i]) << ',' << py(s.y[i]);
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        const double ly = T + 10 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// One chart per metric, one series per distortion kind, severity on the x axis.
inline std::vector<std::pair<std::string, std::string>> sweep_svgs(const SweepResult& r) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const std::string metric : {"s_cons", "s_temp"}) {
        std::vector<ChartSeries> series;
        for (const auto& row : r.rows) {
            if (row.kind == "none") continue;
            auto it = std::find_if(series.begin(), series.end(), [&](const auto& s) { return s.name == row.kind; });
            if (it == series.end()) {
                series.push_back({row.kind, {}, {}});
                it = series.end() - 1;
            }
            it->x.push_back(row.severity);
            it->y.push_back(metric == "s_cons" ? row.mean_s_cons : row.mean_s_temp);
        }
        if (series.empty()) throw ValidationError("sweep report: no distorted rows");
        out.emplace_back("sweep_" + metric + ".svg",
                         line_chart_svg("Distortion sensitivity: mean " + metric, "severity", "mean " + metric, series));
    }
    return out;
}

inline std::string convergence_svg(const std::vector<ConvergenceCurve>& curves) {
    std::vector<ChartSeries> series;
    for (const auto& c : curves) {
        ChartSeries s{c.video_id, {}, c.stds};
        for (std::size_t i = 0; i < c.stds.size(); ++i) s.x.push_back(static_cast<double>(i + 2));
        series.push_back(std::move(s));
    }
    return line_chart_svg("Cumulative MOS standard deviation", "raters", "std", series);
}

}  // namespace actman
