// Microbenchmarks for the hot paths of the localisation pipeline: panoramic
// depth rendering, back-projection, the analytic pose Jacobian, encoding,
// Chamfer scoring, scan alignment, and latent pose optimisation.

#include <benchmark/benchmark.h>

#include <vector>

#include "planloc/embed.hpp"
#include "planloc/icp.hpp"
#include "planloc/localize.hpp"
#include "planloc/metrics.hpp"
#include "planloc/render.hpp"
#include "planloc/rng.hpp"
#include "planloc/scene.hpp"

namespace {

using namespace planloc;

struct Fixture {
    FloorPlan plan;
    Scene3D scene;
    Pose pose;
    PanoDepth depth;          // encoder-resolution render at `pose`
    PointCloud cloud;         // back-projected `depth`
    PointCloud cloud_offset;  // back-projected render from a nearby pose
    EncoderParams params;
    Embedding query;
    std::vector<Vec2> plan_cloud;  // dense wall samples of `scene`
    std::vector<Vec2> scan;        // camera-frame horizontal slice at `pose`
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture x;
        x.plan = generate_floorplan(sub_seed(1, "bench-scene"));
        x.scene = extrude(x.plan);
        x.pose = sample_query_poses(x.plan, 1, sub_seed(1, "bench-pose")).at(0);
        x.depth = render_layout_depth(x.scene, x.pose, kEncoderWidth, kEncoderHeight);
        x.cloud = backproject(x.depth);
        const Pose nearby{x.pose.x + 0.17, x.pose.y - 0.05};
        x.cloud_offset = backproject(
            render_layout_depth(x.scene, nearby, kEncoderWidth, kEncoderHeight));
        x.params = init_params(Branch::Layout, 3);
        x.query = encode(x.params, x.depth);
        x.plan_cloud = plan_wall_cloud(x.scene, 0.025);
        x.scan = horizontal_scan(x.depth);
        return x;
    }();
    return f;
}

void BM_RenderDepth(benchmark::State& state) {
    const Fixture& f = fixture();
    const int w = static_cast<int>(state.range(0));
    const int h = static_cast<int>(state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_layout_depth(f.scene, f.pose, w, h));
    }
}
BENCHMARK(BM_RenderDepth)->Args({kEncoderWidth, kEncoderHeight})->Args({256, 128});

void BM_Backproject(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(backproject(f.depth));
    }
}
BENCHMARK(BM_Backproject);

void BM_DepthPoseJacobian(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            depth_pose_jacobian(f.scene, f.pose, kEncoderWidth, kEncoderHeight));
    }
}
BENCHMARK(BM_DepthPoseJacobian);

void BM_Encode(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(f.params, f.depth));
    }
}
BENCHMARK(BM_Encode);

void BM_Chamfer3d(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(chamfer_3d(f.cloud, f.cloud_offset));
    }
}
BENCHMARK(BM_Chamfer3d);

void BM_IcpAlign(benchmark::State& state) {
    const Fixture& f = fixture();
    const Pose init{f.pose.x + 0.1, f.pose.y - 0.08};
    const ICPConfig config;
    for (auto _ : state) {
        benchmark::DoNotOptimize(icp_align(f.scan, f.plan_cloud, init, config));
    }
}
BENCHMARK(BM_IcpAlign);

void run_lpo(benchmark::State& state, GradientMode mode) {
    const Fixture& f = fixture();
    LPOConfig config;
    config.max_iterations = 20;  // fixed work per run: one short descent
    config.convergence_window = 20;
    config.gradient_mode = mode;
    const Pose init{f.pose.x + 0.12, f.pose.y + 0.09};
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            latent_pose_optimize(init, f.query, f.scene, config, f.params));
    }
}

void BM_LatentPoseOptimizeFiniteDiff(benchmark::State& state) {
    run_lpo(state, GradientMode::FiniteDifference);
}
BENCHMARK(BM_LatentPoseOptimizeFiniteDiff);

void BM_LatentPoseOptimizeAnalytic(benchmark::State& state) {
    run_lpo(state, GradientMode::Analytic);
}
BENCHMARK(BM_LatentPoseOptimizeAnalytic);

}  // namespace

BENCHMARK_MAIN();
