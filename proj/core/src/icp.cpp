#include "planloc/icp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "planloc/error.hpp"
#include "planloc/kdtree.hpp"
#include "planloc/parallel.hpp"

namespace planloc {

std::vector<Vec2> grid_average_downsample(std::span<const Vec2> points, double cell) {
    if (!(cell > 0.0)) throw ValidationError("downsample cell must be positive");
    struct Accum {
        Vec2 sum{0.0, 0.0};
        int count = 0;
    };
    std::map<std::pair<long, long>, Accum> cells;
    for (const Vec2& p : points) {
        const std::pair<long, long> key{static_cast<long>(std::floor(p.x / cell)),
                                        static_cast<long>(std::floor(p.y / cell))};
        Accum& a = cells[key];
        a.sum += p;
        a.count += 1;
    }
    std::vector<Vec2> out;
    out.reserve(cells.size());
    for (const auto& [key, a] : cells) {
        out.push_back(a.sum * (1.0 / a.count));
    }
    return out;
}

std::vector<Vec2> plan_wall_cloud(const Scene3D& scene, double spacing) {
    if (!(spacing > 0.0)) throw ValidationError("wall cloud spacing must be positive");
    std::vector<Vec2> cloud;
    for (const WallQuad& wall : scene.walls) {
        const Vec2 d = wall.b - wall.a;
        const double len = d.norm();
        const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
        for (int i = 0; i <= n; ++i) {
            cloud.push_back(wall.a + d * (static_cast<double>(i) / n));
        }
    }
    return cloud;
}

namespace {

struct Rot {
    double c = 1.0, s = 0.0;
    Vec2 apply(Vec2 p) const { return Vec2{c * p.x - s * p.y, s * p.x + c * p.y}; }
};

}  // namespace

ICPResult icp_align(std::span<const Vec2> scan, std::span<const Vec2> plan_cloud, Pose init,
                    const ICPConfig& config) {
    const std::vector<Vec2> scan_ds = grid_average_downsample(scan, config.downsample_cell);
    if (scan_ds.empty() || plan_cloud.empty()) {
        throw ValidationError("icp_align requires non-empty clouds");
    }

    std::vector<std::array<double, 2>> plan_pts;
    plan_pts.reserve(plan_cloud.size());
    for (const Vec2& p : plan_cloud) plan_pts.push_back({p.x, p.y});
    const KdTree2 tree(std::move(plan_pts));

    Vec2 t{init.x, init.y};
    Rot rot;
    int streak = 0;
    int iterations = 0;
    std::vector<Vec2> matched(scan_ds.size());
    for (; iterations < config.max_iterations; ++iterations) {
        for (std::size_t i = 0; i < scan_ds.size(); ++i) {
            const Vec2 w = rot.apply(scan_ds[i]) + t;
            const auto nn = tree.nearest({w.x, w.y});
            matched[i] = plan_cloud[nn.index];
        }
        // Closed-form absolute alignment of the original scan to its matches.
        Vec2 scan_mean{0.0, 0.0};
        Vec2 match_mean{0.0, 0.0};
        for (std::size_t i = 0; i < scan_ds.size(); ++i) {
            scan_mean += scan_ds[i];
            match_mean += matched[i];
        }
        const double inv_n = 1.0 / static_cast<double>(scan_ds.size());
        scan_mean = scan_mean * inv_n;
        match_mean = match_mean * inv_n;

        Rot new_rot = rot;
        if (config.estimate_rotation) {
            double sum_cross = 0.0;
            double sum_dot = 0.0;
            for (std::size_t i = 0; i < scan_ds.size(); ++i) {
                const Vec2 a = scan_ds[i] - scan_mean;
                const Vec2 b = matched[i] - match_mean;
                sum_cross += a.cross(b);
                sum_dot += a.dot(b);
            }
            const double angle = std::atan2(sum_cross, sum_dot);
            new_rot = Rot{std::cos(angle), std::sin(angle)};
        }
        const Vec2 new_t = match_mean - new_rot.apply(scan_mean);
        const double delta = (new_t - t).norm();
        t = new_t;
        rot = new_rot;
        if (delta < config.translation_epsilon) {
            if (++streak >= config.epsilon_streak) {
                ++iterations;
                break;
            }
        } else {
            streak = 0;
        }
    }

    double sq_sum = 0.0;
    for (const Vec2& s : scan_ds) {
        const Vec2 w = rot.apply(s) + t;
        sq_sum += tree.nearest({w.x, w.y}).sq_dist;
    }
    ICPResult result;
    result.pose = Pose{t.x, t.y};
    result.rmse = std::sqrt(sq_sum / static_cast<double>(scan_ds.size()));
    result.iterations = iterations;
    return result;
}

ICPLocalizeResult icp_localize(std::span<const Vec2> scan, const Scene3D& scene,
                               std::span<const Pose> starts, const ICPConfig& config,
                               int jobs) {
    if (starts.empty()) throw ValidationError("icp_localize requires at least one start pose");
    const std::vector<Vec2> plan_cloud = plan_wall_cloud(scene, config.downsample_cell / 2.0);

    std::vector<ICPResult> results(starts.size());
    parallel_for(starts.size(), jobs, [&](std::size_t i) {
        results[i] = icp_align(scan, plan_cloud, starts[i], config);
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].rmse < results[best].rmse) best = i;
    }
    return ICPLocalizeResult{results[best].pose, results[best].rmse, best};
}

}  // namespace planloc
