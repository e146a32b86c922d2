#include "doctest.h"

#include <cmath>
#include <limits>

#include "planloc/error.hpp"
#include "planloc/render.hpp"
#include "../support.hpp"

using namespace planloc;
using planloc::testing::box_room;

namespace {

// Independent closed-form depth for an axis-aligned box room [0,w]x[0,d]:
// nearest of the four wall planes (full z extent assumed) and the two
// horizontal planes. Valid because floor/ceiling always occlude any wall
// intersection that would leave the z range.
double expected_box_depth(double w, double d, double ceil_h, double cam_h, Pose pose,
                          int u, int v, int width, int height) {
    const double theta = 2.0 * M_PI * (u + 0.5) / width - M_PI;
    const double phi = M_PI * (0.5 - (v + 0.5) / height);
    const double dx = std::cos(phi) * std::cos(theta);
    const double dy = std::cos(phi) * std::sin(theta);
    const double dz = std::sin(phi);
    double best = std::numeric_limits<double>::infinity();
    if (dx > 0.0) best = std::min(best, (w - pose.x) / dx);
    if (dx < 0.0) best = std::min(best, -pose.x / dx);
    if (dy > 0.0) best = std::min(best, (d - pose.y) / dy);
    if (dy < 0.0) best = std::min(best, -pose.y / dy);
    if (dz > 0.0) best = std::min(best, (ceil_h - cam_h) / dz);
    if (dz < 0.0) best = std::min(best, -cam_h / dz);
    return best;
}

}  // namespace

TEST_CASE("box room depth matches the closed form everywhere") {
    const double w = 4.0;
    const double d = 3.0;
    const FloorPlan plan = box_room(w, d);
    const Scene3D scene = extrude(plan);
    for (const Pose pose : {Pose{2.0, 1.5}, Pose{0.7, 1.2}, Pose{3.6, 2.7}}) {
        const PanoDepth img = render_layout_depth(scene, pose, 64, 32);
        for (int v = 0; v < img.height; ++v) {
            for (int u = 0; u < img.width; ++u) {
                const double expected = expected_box_depth(
                    w, d, plan.ceiling_height, plan.camera_height, pose, u, v, 64, 32);
                CHECK(img.at(u, v) == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("labels partition the panorama sensibly") {
    const Scene3D scene = extrude(box_room(4.0, 4.0));
    const PanoDepth img = render_layout_depth(scene, Pose{2.0, 2.0}, 64, 32);
    // Topmost row looks nearly straight up -> ceiling; bottom row -> floor.
    for (int u = 0; u < img.width; ++u) {
        CHECK(img.label_at(u, 0) == kLabelCeiling);
        CHECK(img.label_at(u, img.height - 1) == kLabelFloor);
    }
    // The horizon row must be wall everywhere in a closed room.
    const int mid = img.height / 2;
    bool saw_multiple_edges = false;
    for (int u = 0; u < img.width; ++u) {
        CHECK(img.label_at(u, mid) >= kLabelWallBase);
        if (img.label_at(u, mid) != img.label_at(0, mid)) saw_multiple_edges = true;
    }
    CHECK(saw_multiple_edges);  // four walls sweep past over a full turn
}

TEST_CASE("backprojected points land on the labeled surface") {
    const FloorPlan plan = generate_floorplan(12);
    const Scene3D scene = extrude(plan);
    const Pose pose = sample_query_poses(plan, 1, 5)[0];
    const PanoDepth img = render_layout_depth(scene, pose, 64, 32);
    const PointCloud cloud = backproject(img);
    REQUIRE(cloud.points.size() == img.depth.size());
    std::size_t i = 0;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u, ++i) {
            const Vec3 p = cloud.points[i];
            const double wx = pose.x + p.x;
            const double wy = pose.y + p.y;
            const double wz = plan.camera_height + p.z;
            const std::uint16_t label = img.label_at(u, v);
            if (label == kLabelFloor) {
                CHECK(std::abs(wz) < 1e-9);
            } else if (label == kLabelCeiling) {
                CHECK(std::abs(wz - plan.ceiling_height) < 1e-9);
            } else {
                REQUIRE(label >= kLabelWallBase);
                const int edge = label - kLabelWallBase;
                REQUIRE(edge < static_cast<int>(scene.walls.size()));
                const WallQuad& wall = scene.walls[edge];
                REQUIRE(wall.edge_id == edge);
                CHECK(point_segment_distance({wx, wy}, wall.a, wall.b) < 1e-9);
                CHECK(wz > -1e-9);
                CHECK(wz < plan.ceiling_height + 1e-9);
            }
        }
    }
}

TEST_CASE("furniture only brings surfaces closer") {
    const FloorPlan plan = generate_floorplan(31);
    const std::vector<Pose> poses = sample_query_poses(plan, 3, 8);
    const FurnishedScene furnished =
        place_furniture(plan, FurnitureLevel::Full, 14, poses);
    const Scene3D scene = extrude(plan);
    bool saw_furniture = false;
    for (const Pose& pose : poses) {
        const PanoDepth layout = render_layout_depth(scene, pose, 64, 32);
        const PanoDepth query = render_furnished_depth(furnished, pose, 64, 32);
        for (std::size_t i = 0; i < layout.depth.size(); ++i) {
            CHECK(query.depth[i] <= layout.depth[i] + 1e-12);
            if (query.labels[i] == kLabelFurniture) {
                saw_furniture = true;
                CHECK(query.depth[i] < layout.depth[i] + 1e-12);
            } else {
                CHECK(query.depth[i] == layout.depth[i]);
            }
        }
    }
    CHECK(saw_furniture);
}

TEST_CASE("empty furnished render equals the layout render") {
    const FloorPlan plan = generate_floorplan(4);
    const FurnishedScene empty = place_furniture(plan, FurnitureLevel::Empty, 1);
    const Pose pose = sample_query_poses(plan, 1, 2)[0];
    const PanoDepth a = render_layout_depth(extrude(plan), pose, 32, 16);
    const PanoDepth b = render_furnished_depth(empty, pose, 32, 16);
    CHECK(a.depth == b.depth);
    CHECK(a.labels == b.labels);
}

TEST_CASE("rendering is bitwise deterministic") {
    const FloorPlan plan = generate_floorplan(9);
    const Scene3D scene = extrude(plan);
    const Pose pose = sample_query_poses(plan, 1, 3)[0];
    const PanoDepth a = render_layout_depth(scene, pose, 64, 32);
    const PanoDepth b = render_layout_depth(scene, pose, 64, 32);
    CHECK(a.depth == b.depth);
    CHECK(a.labels == b.labels);
}

TEST_CASE("rendering outside every room fails") {
    const Scene3D scene = extrude(box_room(4.0, 4.0));
    CHECK_THROWS_AS((void)render_layout_depth(scene, Pose{-1.0, 2.0}, 16, 8),
                    RenderError);
}

TEST_CASE("horizontal scan picks the middle row") {
    const Scene3D scene = extrude(box_room(4.0, 3.0));
    const PanoDepth img = render_layout_depth(scene, Pose{1.0, 1.0}, 64, 32);
    const std::vector<Vec2> scan = horizontal_scan(img);
    REQUIRE(scan.size() == 64);
    const int v = 16;  // round(32/2 - 0.5) = 16
    for (int u = 0; u < 64; ++u) {
        const Vec3 dir = pixel_ray(u, v, 64, 32);
        const double t = img.at(u, v);
        CHECK(scan[u].x == doctest::Approx(t * dir.x).epsilon(1e-12));
        CHECK(scan[u].y == doctest::Approx(t * dir.y).epsilon(1e-12));
    }
}

TEST_CASE("analytic jacobian matches finite differences off edges") {
    int checked = 0;
    for (std::uint64_t seed : {101, 102, 103}) {
        const FloorPlan plan = generate_floorplan(seed);
        const Scene3D scene = extrude(plan);
        const Pose pose = sample_query_poses(plan, 1, seed)[0];
        const DepthJacobian ana = depth_pose_jacobian(scene, pose, 64, 32);
        const DepthJacobian fd = fd_depth_jacobian(scene, pose, 64, 32, 1e-4);
        for (std::size_t i = 0; i < ana.d_depth_dx.size(); ++i) {
            if (!ana.valid[i] || !fd.valid[i]) continue;
            const double ex = std::abs(ana.d_depth_dx[i] - fd.d_depth_dx[i]) /
                              std::max(1.0, std::abs(fd.d_depth_dx[i]));
            const double ey = std::abs(ana.d_depth_dy[i] - fd.d_depth_dy[i]) /
                              std::max(1.0, std::abs(fd.d_depth_dy[i]));
            CHECK(ex < 1e-4);
            CHECK(ey < 1e-4);
            ++checked;
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("floor and ceiling depth gradients vanish identically") {
    const Scene3D scene = extrude(box_room(5.0, 4.0));
    const Pose pose{2.5, 2.0};
    const PanoDepth img = render_layout_depth(scene, pose, 64, 32);
    const DepthJacobian jac = depth_pose_jacobian(scene, pose, 64, 32);
    for (std::size_t i = 0; i < img.depth.size(); ++i) {
        if (img.labels[i] == kLabelFloor || img.labels[i] == kLabelCeiling) {
            CHECK(jac.valid[i] == 1);
            CHECK(jac.d_depth_dx[i] == 0.0);
            CHECK(jac.d_depth_dy[i] == 0.0);
        }
    }
}

TEST_CASE("fd jacobian marks label flips invalid") {
    // A large step guarantees the columns aimed nearest the room corners see
    // a different wall under the +/- perturbation.
    const Scene3D scene = extrude(box_room(4.0, 4.0));
    const DepthJacobian fd = fd_depth_jacobian(scene, Pose{2.0, 2.0}, 256, 8, 0.05);
    std::size_t invalid = 0;
    for (std::uint8_t v : fd.valid) invalid += v == 0 ? 1 : 0;
    CHECK(invalid > 0);
}

TEST_CASE("pixel rays are unit length and wrap around") {
    for (int u : {0, 7, 63}) {
        for (int v : {0, 15, 31}) {
            CHECK(pixel_ray(u, v, 64, 32).norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    // Leftmost and rightmost columns look almost the same direction (wrap).
    const Vec3 a = pixel_ray(0, 16, 64, 32);
    const Vec3 b = pixel_ray(63, 16, 64, 32);
    CHECK(a.dot(b) > 0.99);
}
