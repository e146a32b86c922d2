#pragma once

#include <array>
#include <span>
#include <string>

#include "planloc/eval.hpp"
#include "planloc/scene.hpp"

namespace planloc {

// Fixed column set; numbers printed with enough digits to round-trip exactly.
// Header: method,layout_r1,pose_r1,median_cm,under_1cm,under_5cm,under_10cm,under_1m
std::string export_report_csv(const EvalReport& report);

// Same columns as the CSV, formatted as a pipe table for humans.
std::string export_report_markdown(const EvalReport& report);

// Inverse of export_report_csv for the numeric content (per-query error lists
// and the corpus descriptor are not part of the CSV).
EvalReport parse_report_csv(const std::string& text);

// Color ramp used by the distance-field figures; every channel is monotone in
// t, so darker always means nearer.
std::array<int, 3> ramp_rgb(double t);
std::string ramp_color(double t);

// Floor-plan figure with one cell per grid pose, colored by log distance to
// the query; the query pose is marked. `distances` aligns with `grid`.
std::string distance_field_svg(const FloorPlan& plan, std::span<const Pose> grid,
                               std::span<const double> distances, double resolution,
                               Pose query);

}  // namespace planloc
