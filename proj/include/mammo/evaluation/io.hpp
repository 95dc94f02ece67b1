#pragma once

// JSON-lines detections and report writers.
//
//   {"image_id": str, "x_min": int, "y_min": int, "x_max": int, "y_max": int,
//    "conf": float}          <- "conf" only on prediction rows
//
// Blank lines are skipped; row numbers in errors are 1-based file lines.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mammo/error.hpp"
#include "mammo/evaluation/froc.hpp"
#include "mammo/evaluation/matching.hpp"

namespace mammo::eval {

namespace detail {

inline int int_field(const nlohmann::json& row, const char* key, const std::string& src, std::size_t line) {
    if (!row.contains(key)) throw ParseError(src, line, std::string("missing field \"") + key + "\"");
    const auto& v = row.at(key);
    if (!v.is_number_integer()) throw ParseError(src, line, std::string("field \"") + key + "\" must be an integer");
    return v.get<int>();
}

inline std::string id_field(const nlohmann::json& row, const std::string& src, std::size_t line) {
    if (!row.contains("image_id")) throw ParseError(src, line, "missing field \"image_id\"");
    const auto& v = row.at("image_id");
    if (!v.is_string()) throw ParseError(src, line, "field \"image_id\" must be a string");
    return v.get<std::string>();
}

inline BBox box_fields(const nlohmann::json& row, const std::string& src, std::size_t line) {
    BBox b{int_field(row, "x_min", src, line), int_field(row, "y_min", src, line),
           int_field(row, "x_max", src, line), int_field(row, "y_max", src, line)};
    if (!b.valid()) throw ParseError(src, line, "box must satisfy x_min < x_max and y_min < y_max");
    return b;
}

template <class F>
void for_each_row(std::istream& in, const std::string& src, F&& f) {
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(src, line, std::string("invalid JSON: ") + e.what());
        }
        if (!row.is_object()) throw ParseError(src, line, "row must be a JSON object");
        f(row, line);
    }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

}  // namespace detail

inline std::vector<Prediction> parse_predictions(std::istream& in, const std::string& source = "<stream>") {
    std::vector<Prediction> out;
    detail::for_each_row(in, source, [&](const nlohmann::json& row, std::size_t line) {
        Prediction p{detail::id_field(row, source, line), detail::box_fields(row, source, line), 0.0};
        if (!row.contains("conf")) throw ParseError(source, line, "missing field \"conf\"");
        if (!row.at("conf").is_number()) throw ParseError(source, line, "field \"conf\" must be a number");
        p.conf = row.at("conf").get<double>();
        if (!(p.conf >= 0.0 && p.conf <= 1.0)) throw ParseError(source, line, "conf must lie in [0,1]");
        out.push_back(std::move(p));
    });
    return out;
}

inline std::vector<GroundTruth> parse_ground_truth(std::istream& in, const std::string& source = "<stream>") {
    std::vector<GroundTruth> out;
    detail::for_each_row(in, source, [&](const nlohmann::json& row, std::size_t line) {
        out.push_back({detail::id_field(row, source, line), detail::box_fields(row, source, line)});
    });
    return out;
}

inline std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return parse_predictions(in, path.string());
}

inline std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return parse_ground_truth(in, path.string());
}

inline nlohmann::json box_json(const std::string& id, const BBox& b) {
    return {{"image_id", id}, {"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max}};
}

inline void write_predictions(std::ostream& out, const std::vector<Prediction>& preds) {
    for (const auto& p : preds) {
        auto row = box_json(p.image_id, p.box);
        row["conf"] = p.conf;
        out << row.dump() << '\n';
    }
}

inline void write_ground_truth(std::ostream& out, const std::vector<GroundTruth>& gts) {
    for (const auto& g : gts) out << box_json(g.image_id, g.box).dump() << '\n';
}

inline nlohmann::json to_json(const EvalReport& r) {
    return {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn},
            {"n_images", r.n_images}, {"tpr", r.tpr}, {"fppi", r.fppi}};
}

inline std::string froc_csv(const FrocCurve& curve) {
    std::ostringstream os;
    os << "conf_th,fppi,tpr\n";
    char buf[96];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", p.conf_th, p.fppi, p.tpr);
        os << buf;
    }
    return os.str();
}

/// Step-free polyline of TPR against FPPI with labelled axes.
inline std::string froc_svg(const FrocCurve& curve, const std::string& title = "FROC") {
    constexpr double W = 480, H = 360, L = 60, R = 20, T = 30, B = 50;
    double max_fppi = 1.0;
    for (const auto& p : curve.points) max_fppi = std::max(max_fppi, p.fppi);
    const auto px = [&](double f) { return L + (W - L - R) * f / max_fppi; };
    const auto py = [&](double t) { return H - B - (H - T - B) * t; };
    std::ostringstream os;
    char buf[128];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = i / 5.0, f = max_fppi * i / 5.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"end\">%.1f</text>\n",
                      L - 5, py(t) + 3, t);
        os << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"middle\">%.2f</text>\n",
                      px(f), H - B + 15, f);
        os << buf;
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">FPPI</text>\n";
    os << "<text x=\"15\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 "
       << (T + H - B) / 2 << ")\" text-anchor=\"middle\">TPR</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p.fppi), py(p.tpr));
        os << buf;
    }
    os << "\"/>\n</svg>\n";
    return os.str();
}

}  // namespace mammo::eval
