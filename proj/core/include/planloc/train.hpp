#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planloc/embed.hpp"
#include "planloc/kdtree.hpp"
#include "planloc/rng.hpp"
#include "planloc/scene.hpp"

namespace planloc {

struct Triplet {
    Pose anchor_pose;
    Pose pos_pose;
    Pose neg_pose;
    double gt_anchor_pos = 0.0;  // Chamfer, meters
    double gt_anchor_neg = 0.0;
};

struct TrainConfig {
    int epochs = 20;
    double lr = 0.01;
    double decay_factor = 0.1;  // applied when reaching 50% and 75% of the run
    int batch_anchors = 4;
    int n_neg = 20;
    double pos_radius = 0.5;  // meters
    double neg_radius = 2.0;
    int poses_per_scene = 32;      // base poses; each gets a nearby companion
    int anchors_per_epoch = 64;    // random anchors drawn across the pool
    int query_batch = 16;          // flat batch for the plain L2 objective
    std::uint64_t seed = 0;
};

// A pose with everything training needs pre-rendered. Chamfer labels use the
// strided cloud (512 points) with a per-entry index so pair labeling stays
// cheap across epochs.
struct PoolEntry {
    Pose pose;
    PanoDepth layout;                    // encoder-resolution layout render
    Eigen::VectorXd layout_input;        // normalized encoder input
    Eigen::VectorXd layout_target;       // clipped depth in meters (decoder target)
    PointCloud label_cloud;              // strided back-projection
    KdTree3 label_tree;
    std::array<PanoDepth, 3> furnished;  // indexed by FurnitureLevel (query training)
};

struct TrainingScene {
    FloorPlan plan;
    std::vector<PoolEntry> pool;
    mutable std::vector<double> chamfer_cache;  // n*n, -1 = unset

    // Symmetric ground-truth Chamfer between pool entries, floored at 1e-6 m.
    double chamfer_at(std::size_t i, std::size_t j) const;
};

TrainingScene build_training_scene(const FloorPlan& plan, const TrainConfig& config,
                                   std::uint64_t seed, bool with_furnished);

// One anchor's sampled neighbourhood: one positive (index 0) and n_neg
// negatives, with ground-truth Chamfer labels against the anchor.
struct TripletBatch {
    std::size_t anchor = 0;
    std::vector<std::size_t> neighbours;
    std::vector<double> gt_chamfer;

    std::vector<Triplet> triplets(const TrainingScene& scene) const;
};

// Returns nothing when the anchor has no positive within pos_radius or fewer
// than n_neg negatives beyond neg_radius; callers warn and skip.
std::optional<TripletBatch> sample_triplets(const TrainingScene& scene, std::size_t anchor,
                                            int n_neg, double pos_radius, double neg_radius,
                                            Rng& rng);

enum class QueryLoss { L2, LogRatioCross, KdLr };

std::string to_string(QueryLoss loss);
QueryLoss query_loss_from_string(const std::string& s);

struct TrainResult {
    EncoderParams params;
    std::vector<double> epoch_loss;
};

// Divergence policy shared by both stages: throws TrainingError when the
// latest epoch loss is non-finite, or exceeds 10x the first epoch for three
// epochs in a row (streak carries across calls).
void check_divergence(const std::vector<double>& epoch_loss, int& streak);

// Stage one: fit the layout branch (encoder + decoder) with the log-ratio and
// decoding objectives over layout renders.
TrainResult train_layout_branch(std::span<const FloorPlan> scenes, const TrainConfig& config);

// Stage two: fit the query branch against the frozen layout branch on
// furnished-depth inputs; layout params are never modified.
TrainResult train_query_branch(std::span<const FloorPlan> scenes,
                               const EncoderParams& layout_params, QueryLoss loss,
                               const TrainConfig& config);

// Mean |f_p - g_p| over a freshly sampled pose set at the given furniture
// level; the held-out score used to compare trained and untrained branches.
double mean_query_l2(std::span<const FloorPlan> scenes, const EncoderParams& layout_params,
                     const EncoderParams& query_params, FurnitureLevel level,
                     int poses_per_scene, std::uint64_t seed);

}  // namespace planloc
