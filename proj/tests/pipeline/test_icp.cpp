#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "planloc/error.hpp"
#include "planloc/geometry.hpp"
#include "planloc/icp.hpp"
#include "planloc/localize.hpp"
#include "planloc/render.hpp"
#include "planloc/scene.hpp"
#include "../support.hpp"

using namespace planloc;
using planloc::testing::box_room;

TEST_CASE("grid averaging merges cells and keeps lone points") {
    const std::vector<Vec2> pts = {{0.01, 0.01}, {0.04, 0.02}, {0.31, 0.31}};
    const std::vector<Vec2> ds = grid_average_downsample(pts, 0.1);
    REQUIRE(ds.size() == 2);
    CHECK(ds[0].x == doctest::Approx(0.025).epsilon(1e-12));
    CHECK(ds[0].y == doctest::Approx(0.015).epsilon(1e-12));
    CHECK(ds[1].x == 0.31);
    CHECK(ds[1].y == 0.31);

    CHECK_THROWS_AS((void)grid_average_downsample(pts, 0.0), ValidationError);
    CHECK_THROWS_AS((void)grid_average_downsample(pts, -0.1), ValidationError);
    CHECK(grid_average_downsample({}, 0.1).empty());
}

TEST_CASE("wall cloud samples every segment at the requested spacing") {
    const Scene3D scene = extrude(box_room(2.0, 3.0));
    REQUIRE(scene.walls.size() == 4);
    const std::vector<Vec2> cloud = plan_wall_cloud(scene, 0.5);

    std::size_t expected = 0;
    for (const WallQuad& wall : scene.walls) {
        const double len = (wall.b - wall.a).norm();
        expected += static_cast<std::size_t>(
                        std::max(1, static_cast<int>(std::ceil(len / 0.5)))) +
                    1;
    }
    CHECK(cloud.size() == expected);

    for (const Vec2& p : cloud) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const WallQuad& wall : scene.walls) {
            nearest = std::min(nearest, point_segment_distance(p, wall.a, wall.b));
        }
        CHECK(nearest < 1e-12);
    }

    CHECK_THROWS_AS((void)plan_wall_cloud(scene, 0.0), ValidationError);
}

TEST_CASE("alignment recovers an exact translation") {
    const Scene3D scene = extrude(box_room(4.0, 4.0));
    const std::vector<Vec2> plan = plan_wall_cloud(scene, 0.06);
    const Pose gt{1.3, 2.1};
    std::vector<Vec2> scan;
    scan.reserve(plan.size());
    for (const Vec2& p : plan) scan.push_back(p - gt.xy());

    ICPConfig config;  // cell 0.05 < spacing 0.06: downsampling keeps every point
    const Pose init{gt.x + 0.02, gt.y - 0.015};
    const ICPResult res = icp_align(scan, plan, init, config);
    CHECK(pose_distance(res.pose, gt) < 1e-9);
    CHECK(res.rmse < 1e-9);
    CHECK(res.iterations >= 1);

    CHECK_THROWS_AS((void)icp_align({}, plan, init, config), ValidationError);
    CHECK_THROWS_AS((void)icp_align(scan, {}, init, config), ValidationError);
}

TEST_CASE("multi-start localization picks the lowest-residual basin") {
    const FloorPlan plan = box_room(4.0, 4.0);
    const Scene3D scene = extrude(plan);
    const Pose gt{2.8, 1.4};
    const PanoDepth pano = render_layout_depth(scene, gt, 128, 32);
    const std::vector<Vec2> scan = horizontal_scan(pano);
    REQUIRE(scan.size() == 128);

    const std::vector<Pose> starts = grid_poses(plan, 0.5, 0.3);
    ICPConfig config;
    const ICPLocalizeResult res = icp_localize(scan, scene, starts, config);
    CHECK(pose_distance(res.pose, gt) < 0.02);
    REQUIRE(res.best_start < starts.size());

    // The winner must be exactly the single-start run from its start pose,
    // and its residual must be minimal over every start.
    const std::vector<Vec2> dense = plan_wall_cloud(scene, config.downsample_cell / 2.0);
    const ICPResult winner = icp_align(scan, dense, starts[res.best_start], config);
    CHECK(winner.pose.x == res.pose.x);
    CHECK(winner.pose.y == res.pose.y);
    CHECK(winner.rmse == res.rmse);
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const ICPResult run = icp_align(scan, dense, starts[i], config);
        CHECK(res.rmse <= run.rmse);
        if (run.rmse == res.rmse) CHECK(res.best_start <= i);
    }

    // Parallel evaluation must not change the winner.
    const ICPLocalizeResult par = icp_localize(scan, scene, starts, config, 3);
    CHECK(par.pose.x == res.pose.x);
    CHECK(par.pose.y == res.pose.y);
    CHECK(par.best_start == res.best_start);

    CHECK_THROWS_AS((void)icp_localize(scan, scene, {}, config), ValidationError);
}

TEST_CASE("furniture in the scan degrades the alignment") {
    const FloorPlan plan = box_room(4.0, 4.0);
    const Scene3D scene = extrude(plan);
    const Pose gt{2.0, 2.0};
    const std::vector<Pose> starts = grid_poses(plan, 0.5, 0.3);
    ICPConfig config;

    const PanoDepth clean = render_layout_depth(scene, gt, 128, 32);
    const ICPLocalizeResult clean_res =
        icp_localize(horizontal_scan(clean), scene, starts, config);
    const double clean_err = pose_distance(clean_res.pose, gt);

    const FurnishedScene furnished =
        place_furniture(plan, FurnitureLevel::Full, 11, std::vector<Pose>{gt});
    const PanoDepth cluttered = render_furnished_depth(furnished, gt, 128, 32);
    const ICPLocalizeResult full_res =
        icp_localize(horizontal_scan(cluttered), scene, starts, config);
    const double full_err = pose_distance(full_res.pose, gt);

    CHECK(full_err >= clean_err);
    CHECK(full_res.rmse >= clean_res.rmse);
}
