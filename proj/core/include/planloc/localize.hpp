#pragma once

#include <optional>
#include <vector>

#include "planloc/embed.hpp"
#include "planloc/scene.hpp"

namespace planloc {

struct GridDatabase {
    double resolution = 0.5;
    double clearance = 0.3;
    int render_width = kEncoderWidth;
    int render_height = kEncoderHeight;

    struct Entry {
        Pose pose;
        Embedding embedding;
    };
    std::vector<Entry> entries;
    std::vector<PanoDepth> renders;  // parallel to entries when kept

    bool has_renders() const { return renders.size() == entries.size(); }
};

// Uniform grid anchored at plan bbox min + clearance + resolution/2; poses
// outside free space at the given clearance are dropped.
std::vector<Pose> grid_poses(const FloorPlan& plan, double resolution, double clearance);

GridDatabase build_database(const Scene3D& scene, double resolution, double clearance,
                            const EncoderParams& params, int width, int height,
                            bool keep_renders = true, int jobs = 1);

struct Ranked {
    std::size_t index;
    double distance;
};

// Exact brute-force ranking by embedding distance, ascending; ties broken by
// lower entry index.
std::vector<Ranked> retrieve_nn(const Embedding& query, const GridDatabase& db);

// Golden-angle spiral: r_i = radius*sqrt(i/n), theta_i = 2*pi*i*(1 - 1/phi)
// for i = 1..n, with the center prepended as an extra candidate. Purely
// geometric; callers drop points that leave free space.
std::vector<Pose> vogel_points(Pose center, double radius, int n);

struct RefineResult {
    Pose pose;
    double cost;
};

// Render + embed every in-bounds Vogel point and keep the latent-nearest; the
// center is always a candidate, so the result never costs more than it.
RefineResult vdr_refine(Pose center, const Embedding& query, const Scene3D& scene,
                        double radius, int n, const EncoderParams& params, int width,
                        int height);

enum class GradientMode { Analytic, FiniteDifference };

struct LPOConfig {
    double initial_step = 0.01;
    double plateau_factor = 0.5;
    double plateau_threshold = 0.05;  // relative improvement that resets patience
    int plateau_patience = 10;
    double convergence_delta = 0.001;  // cost span over the window that stops
    int convergence_window = 20;
    int max_iterations = 150;
    GradientMode gradient_mode = GradientMode::FiniteDifference;
    double fd_step = 1e-3;       // meters
    double min_clearance = 0.05;  // free-space margin maintained while stepping
};

struct TracePoint {
    Pose pose;
    double cost;
};

struct LPOResult {
    Pose pose;  // best-seen cost over the trace, not the last iterate
    double cost = 0.0;
    std::vector<TracePoint> trace;
};

// Adaptive-moment descent on (x, y) minimizing the embedding distance between
// the layout render at the pose and the query embedding; steps that leave
// free space are shortened back along the step direction.
LPOResult latent_pose_optimize(Pose init, const Embedding& query, const Scene3D& scene,
                               const LPOConfig& config, const EncoderParams& params);

// Same optimizer, but the cost is the mean absolute difference between the
// decoded query image (meters) and the clipped layout render at the pose.
LPOResult decode_refine(Pose init, const PanoDepth& decoded_query, const Scene3D& scene,
                        const LPOConfig& config);

struct PipelineConfig {
    bool use_vdr = true;
    bool use_lpo = true;
    bool use_decode = false;         // decode-and-compare refinement instead of LPO
    double vdr_radius_factor = 2.0;  // Vogel radius = factor * grid resolution
    int vdr_samples = 200;
    LPOConfig lpo;
};

struct LocalizationResult {
    Pose retrieved_pose, vdr_pose, refined_pose;
    std::size_t retrieved_index = 0;
    // Latent distances per stage (decode cost for the decode-refine stage).
    double retrieved_cost = 0.0, vdr_cost = 0.0, refined_cost = 0.0;
    std::vector<TracePoint> lpo_trace;
    std::optional<Pose> gt_pose;
};

// encode -> retrieve -> optional VDR -> optional LPO / decode-refine. Disabled
// stages pass the previous stage's pose through.
LocalizationResult localize_full(const PanoDepth& query_depth, const Scene3D& scene,
                                 const GridDatabase& db, const EncoderParams& query_params,
                                 const EncoderParams& layout_params,
                                 const PipelineConfig& config);

}  // namespace planloc
