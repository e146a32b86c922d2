#pragma once

#include <span>
#include <vector>

#include "planloc/scene.hpp"

namespace planloc {

struct ICPConfig {
    int max_iterations = 50;
    double translation_epsilon = 1e-5;  // meters
    int epsilon_streak = 3;             // consecutive small updates to stop
    double downsample_cell = 0.05;      // meters
    bool estimate_rotation = false;     // yaw is known to be 0 for this task
};

struct ICPResult {
    Pose pose;
    double rmse = 0.0;
    int iterations = 0;
};

// Replace every occupied grid cell by the mean of its points; deterministic
// (cells emitted in sorted cell order).
std::vector<Vec2> grid_average_downsample(std::span<const Vec2> points, double cell);

// Dense sampling of every wall segment at the given spacing (endpoints kept).
std::vector<Vec2> plan_wall_cloud(const Scene3D& scene, double spacing);

// Point-to-point alignment of a camera-frame scan against a world-frame plan
// cloud; the scan is grid-average downsampled first. Translation-only unless
// estimate_rotation is set (the recovered pose is the camera translation in
// either mode).
ICPResult icp_align(std::span<const Vec2> scan, std::span<const Vec2> plan_cloud, Pose init,
                    const ICPConfig& config);

struct ICPLocalizeResult {
    Pose pose;
    double rmse = 0.0;
    std::size_t best_start = 0;  // index into the start pose list
};

// Multi-start alignment from every grid pose, keeping the run with the lowest
// final RMSE (ties: lowest start index).
ICPLocalizeResult icp_localize(std::span<const Vec2> scan, const Scene3D& scene,
                               std::span<const Pose> starts, const ICPConfig& config,
                               int jobs = 1);

}  // namespace planloc
