#include "doctest.h"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "planloc/error.hpp"
#include "planloc/eval.hpp"
#include "planloc/localize.hpp"
#include "planloc/report.hpp"
#include "../support.hpp"

using namespace planloc;
using planloc::testing::box_room;

namespace {

EvalReport sample_report() {
    EvalRow row;
    row.method = "latent";
    row.errors_m = {0.004, 0.02, 0.3, 1.5};
    row.layout_r1 = 0.75;
    row.pose_r1 = 0.5;
    row.correct_room = 1.0;
    row.median_cm = 16.0;  // median of {0.4, 2, 30, 150} cm
    row.under_1cm = 0.25;
    row.under_5cm = 0.5;
    row.under_10cm = 0.5;
    row.under_1m = 0.75;

    EvalReport report;
    report.corpus.scenes = 2;
    report.corpus.queries_per_scene = 2;
    report.scene_seeds = {1, 2};
    report.rows = {row};
    validate(report);
    return report;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace

TEST_CASE("csv export has a fixed header and round-trips exactly") {
    const EvalReport report = sample_report();
    const std::string csv = export_report_csv(report);
    const std::vector<std::string> lines = split_lines(csv);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] ==
          "method,layout_r1,pose_r1,median_cm,under_1cm,under_5cm,under_10cm,under_1m");
    CHECK(lines[1].substr(0, 7) == "latent,");

    const EvalReport parsed = parse_report_csv(csv);
    REQUIRE(parsed.rows.size() == 1);
    const EvalRow& row = parsed.rows[0];
    CHECK(row.method == "latent");
    CHECK(row.layout_r1 == 0.75);
    CHECK(row.pose_r1 == 0.5);
    CHECK(row.median_cm == 16.0);
    CHECK(row.under_1cm == 0.25);
    CHECK(row.under_5cm == 0.5);
    CHECK(row.under_10cm == 0.5);
    CHECK(row.under_1m == 0.75);

    CHECK(export_report_csv(parsed) == csv);
}

TEST_CASE("csv parser rejects malformed input") {
    CHECK_THROWS_AS((void)parse_report_csv("method,layout_r1\nx,1\n"), ParseError);
    CHECK_THROWS_AS(
        (void)parse_report_csv(
            "method,layout_r1,pose_r1,median_cm,under_1cm,under_5cm,under_10cm,under_1m\n"
            "latent,1,1,2,0.1,0.2,0.3\n"),
        ParseError);
    CHECK_THROWS_AS(
        (void)parse_report_csv(
            "method,layout_r1,pose_r1,median_cm,under_1cm,under_5cm,under_10cm,under_1m\n"
            "latent,1,abc,2,0.1,0.2,0.3,0.4\n"),
        ParseError);
    CHECK_THROWS_AS(
        (void)parse_report_csv(
            "method,layout_r1,pose_r1,median_cm,under_1cm,under_5cm,under_10cm,under_1m\n"
            "latent,1,1x,2,0.1,0.2,0.3,0.4\n"),
        ParseError);
    CHECK_THROWS_AS((void)parse_report_csv(""), ParseError);
}

TEST_CASE("markdown table carries the same numbers for humans") {
    const std::string md = export_report_markdown(sample_report());
    CHECK(md.find("| Method | Layout R@1 | Pose R@1 | Median (cm) | <1cm | <5cm | <10cm "
                  "| <1m |") != std::string::npos);
    CHECK(md.find("latent") != std::string::npos);
    CHECK(md.find("16.00") != std::string::npos);
    CHECK(md.find("0.750") != std::string::npos);
}

TEST_CASE("color ramp is monotone per channel") {
    const std::array<int, 3> lo = ramp_rgb(0.0);
    const std::array<int, 3> hi = ramp_rgb(1.0);
    std::array<int, 3> prev = lo;
    for (int i = 1; i <= 16; ++i) {
        const std::array<int, 3> cur = ramp_rgb(i / 16.0);
        CHECK(cur[0] >= prev[0]);
        CHECK(cur[1] >= prev[1]);
        CHECK(cur[2] <= prev[2]);
        prev = cur;
    }
    CHECK(lo[0] < hi[0]);
    CHECK(lo[2] > hi[2]);

    const std::string c0 = ramp_color(0.0);
    REQUIRE(c0.size() == 7);
    CHECK(c0[0] == '#');
    // Out-of-range inputs clamp to the ends.
    CHECK(ramp_color(-2.0) == c0);
    CHECK(ramp_color(5.0) == ramp_color(1.0));
}

TEST_CASE("distance field figure marks the nearest cell darkest") {
    const FloorPlan plan = box_room(2.0, 2.0);
    const std::vector<Pose> grid = grid_poses(plan, 0.5, 0.3);
    REQUIRE(grid.size() == 9);

    std::vector<double> distances(grid.size());
    std::size_t nearest = 4;  // give the center cell the lowest distance
    for (std::size_t i = 0; i < distances.size(); ++i) {
        distances[i] = (i == nearest) ? 0.01 : 0.2 + 0.05 * static_cast<double>(i);
    }

    const std::string svg =
        distance_field_svg(plan, grid, distances, 0.5, Pose{1.0, 1.0});
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<polygon points=") != std::string::npos);
    CHECK(svg.find("<circle") != std::string::npos);

    // One background rect plus one per grid cell.
    std::size_t rects = 0;
    for (std::size_t at = svg.find("<rect"); at != std::string::npos;
         at = svg.find("<rect", at + 1)) {
        ++rects;
    }
    CHECK(rects == 1 + grid.size());

    // Cell fills appear in grid order after the white background; the lowest
    // distance must map to the dark end of the ramp.
    std::vector<std::string> fills;
    for (std::size_t at = svg.find("fill=\"#"); at != std::string::npos;
         at = svg.find("fill=\"#", at + 1)) {
        fills.push_back(svg.substr(at + 6, 7));
    }
    REQUIRE(fills.size() >= 1 + grid.size());
    CHECK(fills[0] == "#ffffff");
    CHECK(fills[1 + nearest] == ramp_color(0.0));

    std::vector<double> wrong(grid.size() - 1, 0.0);
    CHECK_THROWS_AS(
        (void)distance_field_svg(plan, grid, wrong, 0.5, Pose{1.0, 1.0}),
        ValidationError);
}
