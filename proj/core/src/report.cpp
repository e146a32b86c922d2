#include "planloc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "planloc/error.hpp"

namespace planloc {

namespace {

constexpr const char* kCsvHeader =
    "method,layout_r1,pose_r1,median_cm,under_1cm,under_5cm,under_10cm,under_1m";

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string num_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

double parse_double(const std::string& field, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0') {
        throw ParseError("report CSV: bad number '" + field + "' in " + where);
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

}  // namespace

std::string export_report_csv(const EvalReport& report) {
    std::string out = kCsvHeader;
    out.push_back('\n');
    for (const EvalRow& r : report.rows) {
        out += r.method;
        out += ',' + num(r.layout_r1);
        out += ',' + num(r.pose_r1);
        out += ',' + num(r.median_cm);
        out += ',' + num(r.under_1cm);
        out += ',' + num(r.under_5cm);
        out += ',' + num(r.under_10cm);
        out += ',' + num(r.under_1m);
        out.push_back('\n');
    }
    return out;
}

std::string export_report_markdown(const EvalReport& report) {
    std::ostringstream out;
    out << "| Method | Layout R@1 | Pose R@1 | Median (cm) | <1cm | <5cm | <10cm | <1m |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const EvalRow& r : report.rows) {
        char median[40];
        std::snprintf(median, sizeof(median), "%.2f", r.median_cm);
        out << "| " << r.method << " | " << num_short(r.layout_r1) << " | "
            << num_short(r.pose_r1) << " | " << median << " | " << num_short(r.under_1cm)
            << " | " << num_short(r.under_5cm) << " | " << num_short(r.under_10cm)
            << " | " << num_short(r.under_1m) << " |\n";
    }
    return out.str();
}

EvalReport parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("report CSV: empty document");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw ParseError("report CSV: unexpected header '" + line + "'");
    }
    EvalReport report;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 8) {
            throw ParseError("report CSV: expected 8 fields, got " +
                             std::to_string(fields.size()) + " in '" + line + "'");
        }
        EvalRow row;
        row.method = fields[0];
        const std::string where = "row '" + row.method + "'";
        row.layout_r1 = parse_double(fields[1], where);
        row.pose_r1 = parse_double(fields[2], where);
        row.median_cm = parse_double(fields[3], where);
        row.under_1cm = parse_double(fields[4], where);
        row.under_5cm = parse_double(fields[5], where);
        row.under_10cm = parse_double(fields[6], where);
        row.under_1m = parse_double(fields[7], where);
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::array<int, 3> ramp_rgb(double t) {
    t = std::clamp(t, 0.0, 1.0);
    // Near = dark blue, far = warm yellow; each channel moves one way only.
    const double r = 20.0 + t * (250.0 - 20.0);
    const double g = 40.0 + t * (220.0 - 40.0);
    const double b = 140.0 - t * (140.0 - 60.0);
    return {static_cast<int>(std::lround(r)), static_cast<int>(std::lround(g)),
            static_cast<int>(std::lround(b))};
}

std::string ramp_color(double t) {
    const std::array<int, 3> rgb = ramp_rgb(t);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::string distance_field_svg(const FloorPlan& plan, std::span<const Pose> grid,
                               std::span<const double> distances, double resolution,
                               Pose query) {
    if (grid.size() != distances.size()) {
        throw ValidationError("distance field: grid/distance size mismatch");
    }
    const Rect bounds = plan_bounds(plan);
    const double margin = 0.5;
    const double scale = 100.0;  // px per meter
    const double width = (bounds.hi.x - bounds.lo.x + 2.0 * margin) * scale;
    const double height = (bounds.hi.y - bounds.lo.y + 2.0 * margin) * scale;
    auto px = [&](double x) { return (x - bounds.lo.x + margin) * scale; };
    auto py = [&](double y) { return (bounds.hi.y - y + margin) * scale; };

    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    std::vector<double> logd(distances.size());
    for (std::size_t i = 0; i < distances.size(); ++i) {
        logd[i] = std::log(std::max(distances[i], 1e-9));
        lo = std::min(lo, logd[i]);
        hi = std::max(hi, logd[i]);
    }
    const double span = hi - lo;

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    char dims[128];
    std::snprintf(dims, sizeof(dims), "%.1f %.1f", width, height);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << dims
        << "\" width=\"" << std::lround(width) << "\" height=\"" << std::lround(height)
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    const double cell = resolution * scale;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = span > 0.0 ? (logd[i] - lo) / span : 0.0;
        char rect[200];
        std::snprintf(rect, sizeof(rect),
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                      "fill=\"%s\"/>\n",
                      px(grid[i].x) - cell / 2.0, py(grid[i].y) - cell / 2.0, cell, cell,
                      ramp_color(t).c_str());
        out << rect;
    }

    for (const Polygon& room : plan.rooms) {
        out << "<polygon points=\"";
        for (std::size_t i = 0; i < room.size(); ++i) {
            char pt[64];
            std::snprintf(pt, sizeof(pt), "%s%.1f,%.1f", i == 0 ? "" : " ",
                          px(room[i].x), py(room[i].y));
            out << pt;
        }
        out << "\" fill=\"none\" stroke=\"#202020\" stroke-width=\"4\"/>\n";
    }

    char marker[200];
    std::snprintf(marker, sizeof(marker),
                  "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"8\" fill=\"#ffffff\" "
                  "stroke=\"#d81b1b\" stroke-width=\"4\"/>\n",
                  px(query.x), py(query.y));
    out << marker;
    out << "</svg>\n";
    return out.str();
}

}  // namespace planloc
