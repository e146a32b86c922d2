#include "planloc/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "planloc/error.hpp"
#include "planloc/metrics.hpp"

namespace planloc {

namespace {

constexpr double kChamferFloor = 1e-6;
constexpr int kLabelStride = 2;

std::vector<std::array<double, 3>> cloud_points(const PointCloud& c) {
    std::vector<std::array<double, 3>> pts;
    pts.reserve(c.points.size());
    for (const Vec3& p : c.points) pts.push_back({p.x, p.y, p.z});
    return pts;
}

double chamfer_with_trees(const PoolEntry& a, const PoolEntry& b) {
    double sum_a = 0.0;
    for (const Vec3& p : a.label_cloud.points) {
        sum_a += std::sqrt(b.label_tree.nearest({p.x, p.y, p.z}).sq_dist);
    }
    double sum_b = 0.0;
    for (const Vec3& p : b.label_cloud.points) {
        sum_b += std::sqrt(a.label_tree.nearest({p.x, p.y, p.z}).sq_dist);
    }
    return sum_a / static_cast<double>(a.label_cloud.points.size()) +
           sum_b / static_cast<double>(b.label_cloud.points.size());
}

Eigen::VectorXd clipped_depth_vector(const PanoDepth& img) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(img.depth.size()));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        t[i] = std::clamp(img.depth[static_cast<std::size_t>(i)], kDepthClipMin, kDepthClipMax);
    }
    return t;
}

struct Forward {
    Eigen::VectorXd pre;
    Embedding e;
    double norm = 0.0;
};

Forward forward(const EncoderParams& p, const Eigen::VectorXd& x) {
    Forward f;
    f.pre = p.weights * x + p.bias;
    f.norm = f.pre.norm();
    if (f.norm < 1e-12) throw TrainingError("encoder output collapsed to zero norm");
    f.e = f.pre / f.norm;
    return f;
}

Eigen::VectorXd through_norm(const Forward& f, const Embedding& grad) {
    return (grad - f.e.dot(grad) * f.e) / f.norm;
}

double lr_at_epoch(const TrainConfig& config, int epoch) {
    double lr = config.lr;
    if (epoch >= config.epochs / 2) lr *= config.decay_factor;
    if (epoch >= (3 * config.epochs) / 4) lr *= config.decay_factor;
    return lr;
}

struct AnchorRef {
    std::size_t scene;
    std::size_t entry;
};

std::vector<AnchorRef> draw_anchors(std::span<const TrainingScene> scenes, int count,
                                    Rng& rng) {
    std::vector<AnchorRef> anchors;
    anchors.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const std::size_t s =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(scenes.size()) - 1));
        const std::size_t e = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(scenes[s].pool.size()) - 1));
        anchors.push_back(AnchorRef{s, e});
    }
    return anchors;
}

}  // namespace

void check_divergence(const std::vector<double>& epoch_loss, int& streak) {
    const double latest = epoch_loss.back();
    if (!std::isfinite(latest)) throw TrainingError("training loss is not finite");
    if (epoch_loss.size() > 1 && latest > 10.0 * epoch_loss.front()) {
        ++streak;
    } else {
        streak = 0;
    }
    if (streak >= 3) {
        throw TrainingError("training diverged: loss exceeded 10x the initial epoch for 3 "
                            "consecutive epochs");
    }
}

double TrainingScene::chamfer_at(std::size_t i, std::size_t j) const {
    const std::size_t n = pool.size();
    double& slot = chamfer_cache[std::min(i, j) * n + std::max(i, j)];
    if (slot < 0.0) slot = std::max(chamfer_with_trees(pool[i], pool[j]), kChamferFloor);
    return slot;
}

TrainingScene build_training_scene(const FloorPlan& plan, const TrainConfig& config,
                                   std::uint64_t seed, bool with_furnished) {
    TrainingScene ts;
    ts.plan = plan;
    const Scene3D scene3d = extrude(plan);

    const std::vector<Pose> base =
        sample_query_poses(plan, config.poses_per_scene, sub_seed(seed, "pool-base", 0));
    Rng companion_rng(sub_seed(seed, "pool-companion", 0));
    std::vector<Pose> poses = base;
    for (const Pose& b : base) {
        // A nearby companion guarantees each anchor a positive sample.
        for (int attempt = 0; attempt < 50; ++attempt) {
            const double r = 0.9 * config.pos_radius * std::sqrt(companion_rng.uniform());
            const double ang = companion_rng.uniform(0.0, 2.0 * M_PI);
            const Pose c{b.x + r * std::cos(ang), b.y + r * std::sin(ang)};
            if (pose_distance(b, c) > 0.02 && in_free_space(plan, c.xy(), 0.3)) {
                poses.push_back(c);
                break;
            }
        }
    }

    std::array<FurnishedScene, 3> furnished_scenes;
    if (with_furnished) {
        furnished_scenes[1] = place_furniture(plan, FurnitureLevel::Simple,
                                              sub_seed(seed, "pool-furniture", 1), poses);
        furnished_scenes[2] = place_furniture(plan, FurnitureLevel::Full,
                                              sub_seed(seed, "pool-furniture", 2), poses);
    }

    ts.pool.reserve(poses.size());
    for (const Pose& pose : poses) {
        PoolEntry entry;
        entry.pose = pose;
        entry.layout = render_layout_depth(scene3d, pose, kEncoderWidth, kEncoderHeight);
        entry.layout_input = normalize_depth_input(entry.layout);
        entry.layout_target = clipped_depth_vector(entry.layout);
        entry.label_cloud = backproject_strided(entry.layout, kLabelStride);
        entry.label_tree = KdTree3(cloud_points(entry.label_cloud));
        if (with_furnished) {
            entry.furnished[0] = entry.layout;
            entry.furnished[1] =
                render_furnished_depth(furnished_scenes[1], pose, kEncoderWidth, kEncoderHeight);
            entry.furnished[2] =
                render_furnished_depth(furnished_scenes[2], pose, kEncoderWidth, kEncoderHeight);
        }
        ts.pool.push_back(std::move(entry));
    }
    ts.chamfer_cache.assign(ts.pool.size() * ts.pool.size(), -1.0);
    return ts;
}

std::vector<Triplet> TripletBatch::triplets(const TrainingScene& scene) const {
    std::vector<Triplet> out;
    if (neighbours.size() < 2) return out;
    out.reserve(neighbours.size() - 1);
    for (std::size_t k = 1; k < neighbours.size(); ++k) {
        Triplet t;
        t.anchor_pose = scene.pool[anchor].pose;
        t.pos_pose = scene.pool[neighbours[0]].pose;
        t.neg_pose = scene.pool[neighbours[k]].pose;
        t.gt_anchor_pos = gt_chamfer[0];
        t.gt_anchor_neg = gt_chamfer[k];
        out.push_back(t);
    }
    return out;
}

std::optional<TripletBatch> sample_triplets(const TrainingScene& scene, std::size_t anchor,
                                            int n_neg, double pos_radius, double neg_radius,
                                            Rng& rng) {
    const Pose a = scene.pool[anchor].pose;
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < scene.pool.size(); ++i) {
        if (i == anchor) continue;
        const double d = pose_distance(a, scene.pool[i].pose);
        if (d > 0.0 && d < pos_radius) positives.push_back(i);
        if (d > neg_radius) negatives.push_back(i);
    }
    if (positives.empty() || negatives.size() < static_cast<std::size_t>(n_neg)) {
        return std::nullopt;
    }
    TripletBatch batch;
    batch.anchor = anchor;
    batch.neighbours.push_back(positives[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(positives.size()) - 1))]);
    // Partial Fisher-Yates draw of n_neg distinct negatives.
    for (int k = 0; k < n_neg; ++k) {
        const std::size_t pick = static_cast<std::size_t>(
            rng.uniform_int(k, static_cast<std::int64_t>(negatives.size()) - 1));
        std::swap(negatives[static_cast<std::size_t>(k)], negatives[pick]);
        batch.neighbours.push_back(negatives[static_cast<std::size_t>(k)]);
    }
    batch.gt_chamfer.reserve(batch.neighbours.size());
    for (const std::size_t n : batch.neighbours) {
        batch.gt_chamfer.push_back(scene.chamfer_at(anchor, n));
    }
    return batch;
}

std::string to_string(QueryLoss loss) {
    switch (loss) {
        case QueryLoss::L2: return "l2";
        case QueryLoss::LogRatioCross: return "log_ratio_cross";
        case QueryLoss::KdLr: return "kd_lr";
    }
    return "l2";
}

QueryLoss query_loss_from_string(const std::string& s) {
    if (s == "l2") return QueryLoss::L2;
    if (s == "log_ratio_cross") return QueryLoss::LogRatioCross;
    if (s == "kd_lr") return QueryLoss::KdLr;
    throw ParseError("unknown query loss '" + s + "' (expected l2|log_ratio_cross|kd_lr)");
}

TrainResult train_layout_branch(std::span<const FloorPlan> scenes, const TrainConfig& config) {
    if (scenes.empty()) throw TrainingError("layout training requires at least one scene");

    std::vector<TrainingScene> pool;
    pool.reserve(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        pool.push_back(
            build_training_scene(scenes[i], config, sub_seed(config.seed, "pool", i), false));
    }

    TrainResult result;
    result.params = init_params(Branch::Layout, sub_seed(config.seed, "init-layout", 0));
    EncoderParams& p = result.params;
    const double inv_pixels = 1.0 / static_cast<double>(kEncoderInputDim);

    int divergence_streak = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(sub_seed(config.seed, "layout-epoch", static_cast<std::uint64_t>(epoch)));
        const double lr = lr_at_epoch(config, epoch);
        const std::vector<AnchorRef> anchors =
            draw_anchors(pool, config.anchors_per_epoch, rng);

        double epoch_sum = 0.0;
        std::size_t epoch_count = 0;
        for (std::size_t start = 0; start < anchors.size();
             start += static_cast<std::size_t>(config.batch_anchors)) {
            Eigen::MatrixXd gW = Eigen::MatrixXd::Zero(kEmbedDim, kEncoderInputDim);
            Eigen::VectorXd gb = Eigen::VectorXd::Zero(kEmbedDim);
            Eigen::MatrixXd gWd = Eigen::MatrixXd::Zero(kEncoderInputDim, kEmbedDim);
            Eigen::VectorXd gbd = Eigen::VectorXd::Zero(kEncoderInputDim);
            int used = 0;

            const std::size_t stop = std::min(
                anchors.size(), start + static_cast<std::size_t>(config.batch_anchors));
            for (std::size_t a = start; a < stop; ++a) {
                const TrainingScene& ts = pool[anchors[a].scene];
                const std::optional<TripletBatch> batch =
                    sample_triplets(ts, anchors[a].entry, config.n_neg, config.pos_radius,
                                    config.neg_radius, rng);
                if (!batch) {
                    std::cerr << "warning: anchor without valid positive/negative set "
                                 "skipped\n";
                    continue;
                }

                // Member 0 is the anchor, members 1.. are the sampled neighbours.
                const std::size_t m = batch->neighbours.size() + 1;
                Eigen::MatrixXd x(kEncoderInputDim, static_cast<Eigen::Index>(m));
                x.col(0) = ts.pool[batch->anchor].layout_input;
                for (std::size_t k = 0; k < batch->neighbours.size(); ++k) {
                    x.col(static_cast<Eigen::Index>(k + 1)) =
                        ts.pool[batch->neighbours[k]].layout_input;
                }
                const Eigen::MatrixXd pre = (p.weights * x).colwise() + p.bias;
                const Eigen::VectorXd norms = pre.colwise().norm().transpose();
                for (Eigen::Index c = 0; c < norms.size(); ++c) {
                    if (norms[c] < 1e-12) {
                        throw TrainingError("encoder output collapsed to zero norm");
                    }
                }
                const Eigen::MatrixXd emb =
                    (pre.array().rowwise() / norms.transpose().array()).matrix();

                Eigen::MatrixXd grad_e =
                    Eigen::MatrixXd::Zero(kEmbedDim, static_cast<Eigen::Index>(m));
                double ratio_sum = 0.0;
                std::size_t pairs = 0;
                for (std::size_t i = 0; i < batch->neighbours.size(); ++i) {
                    for (std::size_t j = 0; j < batch->neighbours.size(); ++j) {
                        if (i == j) continue;
                        const LogRatioLoss l = loss_log_ratio(
                            emb.col(0), emb.col(static_cast<Eigen::Index>(i + 1)),
                            emb.col(static_cast<Eigen::Index>(j + 1)), batch->gt_chamfer[i],
                            batch->gt_chamfer[j]);
                        ratio_sum += l.value;
                        grad_e.col(0) += l.grad_anchor;
                        grad_e.col(static_cast<Eigen::Index>(i + 1)) += l.grad_i;
                        grad_e.col(static_cast<Eigen::Index>(j + 1)) += l.grad_j;
                        ++pairs;
                    }
                }
                const double inv_pairs = pairs > 0 ? 1.0 / static_cast<double>(pairs) : 0.0;
                ratio_sum *= inv_pairs;
                grad_e *= inv_pairs;

                // Decoding objective over every member of the group.
                const Eigen::MatrixXd pred = (p.decoder_weights * emb).colwise() + p.decoder_bias;
                Eigen::MatrixXd grad_dec =
                    Eigen::MatrixXd::Zero(kEncoderInputDim, static_cast<Eigen::Index>(m));
                double dec_sum = 0.0;
                const double inv_members = 1.0 / static_cast<double>(m);
                for (std::size_t k = 0; k < m; ++k) {
                    const Eigen::Index c = static_cast<Eigen::Index>(k);
                    const std::size_t entry =
                        k == 0 ? batch->anchor : batch->neighbours[k - 1];
                    const Eigen::VectorXd resid = pred.col(c) - ts.pool[entry].layout_target;
                    dec_sum += resid.lpNorm<1>() * inv_pixels;
                    grad_dec.col(c) =
                        resid.array().sign().matrix() * (inv_pixels * inv_members);
                }
                dec_sum *= inv_members;

                gWd += grad_dec * emb.transpose();
                gbd += grad_dec.rowwise().sum();
                grad_e += p.decoder_weights.transpose() * grad_dec;

                // Pull member gradients through the L2 normalization.
                Eigen::MatrixXd grad_pre(kEmbedDim, static_cast<Eigen::Index>(m));
                for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(m); ++c) {
                    const Eigen::VectorXd e = emb.col(c);
                    grad_pre.col(c) = (grad_e.col(c) - e.dot(grad_e.col(c)) * e) / norms[c];
                }
                gW += grad_pre * x.transpose();
                gb += grad_pre.rowwise().sum();

                epoch_sum += ratio_sum + dec_sum;
                ++epoch_count;
                ++used;
            }

            if (used > 0) {
                const double scale = lr / static_cast<double>(used);
                p.weights -= scale * gW;
                p.bias -= scale * gb;
                p.decoder_weights -= scale * gWd;
                p.decoder_bias -= scale * gbd;
            }
        }

        if (epoch_count == 0) throw TrainingError("no usable anchors in epoch");
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(epoch_count));
        check_divergence(result.epoch_loss, divergence_streak);
    }
    return result;
}

TrainResult train_query_branch(std::span<const FloorPlan> scenes,
                               const EncoderParams& layout_params, QueryLoss loss,
                               const TrainConfig& config) {
    if (scenes.empty()) throw TrainingError("query training requires at least one scene");
    validate(layout_params);
    if (layout_params.branch != Branch::Layout) {
        throw TrainingError("query training requires layout-branch teacher parameters");
    }

    std::vector<TrainingScene> pool;
    std::vector<std::vector<Embedding>> teacher;     // per scene, per entry
    std::vector<std::vector<std::array<Eigen::VectorXd, 3>>> query_inputs;
    pool.reserve(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        pool.push_back(
            build_training_scene(scenes[i], config, sub_seed(config.seed, "pool", i), true));
        std::vector<Embedding> t;
        std::vector<std::array<Eigen::VectorXd, 3>> q;
        t.reserve(pool.back().pool.size());
        q.reserve(pool.back().pool.size());
        for (const PoolEntry& entry : pool.back().pool) {
            t.push_back(forward(layout_params, entry.layout_input).e);
            q.push_back({normalize_depth_input(entry.furnished[0]),
                         normalize_depth_input(entry.furnished[1]),
                         normalize_depth_input(entry.furnished[2])});
        }
        teacher.push_back(std::move(t));
        query_inputs.push_back(std::move(q));
    }

    TrainResult result;
    result.params = init_params(Branch::Query, sub_seed(config.seed, "init-query", 0));
    EncoderParams& p = result.params;

    int divergence_streak = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(sub_seed(config.seed, "query-epoch", static_cast<std::uint64_t>(epoch)));
        const double lr = lr_at_epoch(config, epoch);

        double epoch_sum = 0.0;
        std::size_t epoch_count = 0;
        if (loss == QueryLoss::L2) {
            std::size_t total = 0;
            for (const TrainingScene& ts : pool) total += ts.pool.size();
            const std::size_t iters =
                std::max<std::size_t>(1, total / static_cast<std::size_t>(config.query_batch));
            for (std::size_t iter = 0; iter < iters; ++iter) {
                const std::vector<AnchorRef> picks =
                    draw_anchors(pool, config.query_batch, rng);
                Eigen::MatrixXd x(kEncoderInputDim,
                                  static_cast<Eigen::Index>(picks.size()));
                for (std::size_t k = 0; k < picks.size(); ++k) {
                    const int level = static_cast<int>(rng.uniform_int(0, 2));
                    x.col(static_cast<Eigen::Index>(k)) =
                        query_inputs[picks[k].scene][picks[k].entry]
                                    [static_cast<std::size_t>(level)];
                }
                const Eigen::MatrixXd pre = (p.weights * x).colwise() + p.bias;
                const Eigen::VectorXd norms = pre.colwise().norm().transpose();
                Eigen::MatrixXd grad_pre(kEmbedDim, static_cast<Eigen::Index>(picks.size()));
                for (std::size_t k = 0; k < picks.size(); ++k) {
                    const Eigen::Index c = static_cast<Eigen::Index>(k);
                    if (norms[c] < 1e-12) {
                        throw TrainingError("encoder output collapsed to zero norm");
                    }
                    const Embedding f = pre.col(c) / norms[c];
                    const L2Loss l = loss_l2(f, teacher[picks[k].scene][picks[k].entry]);
                    epoch_sum += l.value;
                    ++epoch_count;
                    grad_pre.col(c) = (l.grad_query - f.dot(l.grad_query) * f) / norms[c];
                }
                const double scale = lr / static_cast<double>(picks.size());
                p.weights -= scale * (grad_pre * x.transpose());
                p.bias -= scale * grad_pre.rowwise().sum();
            }
        } else {
            const std::vector<AnchorRef> anchors =
                draw_anchors(pool, config.anchors_per_epoch, rng);
            for (std::size_t start = 0; start < anchors.size();
                 start += static_cast<std::size_t>(config.batch_anchors)) {
                Eigen::MatrixXd gW = Eigen::MatrixXd::Zero(kEmbedDim, kEncoderInputDim);
                Eigen::VectorXd gb = Eigen::VectorXd::Zero(kEmbedDim);
                int used = 0;
                const std::size_t stop = std::min(
                    anchors.size(), start + static_cast<std::size_t>(config.batch_anchors));
                for (std::size_t a = start; a < stop; ++a) {
                    const TrainingScene& ts = pool[anchors[a].scene];
                    const std::optional<TripletBatch> batch =
                        sample_triplets(ts, anchors[a].entry, config.n_neg, config.pos_radius,
                                        config.neg_radius, rng);
                    if (!batch) {
                        std::cerr << "warning: anchor without valid positive/negative set "
                                     "skipped\n";
                        continue;
                    }
                    const int level = static_cast<int>(rng.uniform_int(0, 2));
                    const Eigen::VectorXd& x =
                        query_inputs[anchors[a].scene][batch->anchor]
                                    [static_cast<std::size_t>(level)];
                    const Forward f = forward(p, x);
                    const std::vector<Embedding>& t = teacher[anchors[a].scene];

                    Embedding grad_f = Embedding::Zero();
                    double anchor_sum = 0.0;
                    std::size_t pairs = 0;
                    for (std::size_t i = 0; i < batch->neighbours.size(); ++i) {
                        for (std::size_t j = 0; j < batch->neighbours.size(); ++j) {
                            if (i == j) continue;
                            CrossLoss l;
                            if (loss == QueryLoss::LogRatioCross) {
                                l = loss_log_ratio_cross(f.e, t[batch->neighbours[i]],
                                                         t[batch->neighbours[j]],
                                                         batch->gt_chamfer[i],
                                                         batch->gt_chamfer[j]);
                            } else {
                                l = loss_kd_lr(f.e, t[batch->anchor], t[batch->neighbours[i]],
                                               t[batch->neighbours[j]]);
                            }
                            anchor_sum += l.value;
                            grad_f += l.grad_query;
                            ++pairs;
                        }
                    }
                    if (pairs == 0) continue;
                    const double inv_pairs = 1.0 / static_cast<double>(pairs);
                    const Eigen::VectorXd grad_pre =
                        through_norm(f, (grad_f * inv_pairs).eval());
                    gW += grad_pre * x.transpose();
                    gb += grad_pre;
                    epoch_sum += anchor_sum * inv_pairs;
                    ++epoch_count;
                    ++used;
                }
                if (used > 0) {
                    const double scale = lr / static_cast<double>(used);
                    p.weights -= scale * gW;
                    p.bias -= scale * gb;
                }
            }
        }

        if (epoch_count == 0) throw TrainingError("no usable samples in epoch");
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(epoch_count));
        check_divergence(result.epoch_loss, divergence_streak);
    }
    return result;
}

double mean_query_l2(std::span<const FloorPlan> scenes, const EncoderParams& layout_params,
                     const EncoderParams& query_params, FurnitureLevel level,
                     int poses_per_scene, std::uint64_t seed) {
    if (scenes.empty()) throw ValidationError("mean_query_l2: no scenes");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const FloorPlan& plan = scenes[i];
        const Scene3D scene3d = extrude(plan);
        const std::vector<Pose> poses =
            sample_query_poses(plan, poses_per_scene, sub_seed(seed, "heldout", i));
        FurnishedScene furnished;
        if (level != FurnitureLevel::Empty) {
            furnished = place_furniture(plan, level, sub_seed(seed, "heldout-furniture", i),
                                        poses);
        }
        for (const Pose& pose : poses) {
            const PanoDepth layout =
                render_layout_depth(scene3d, pose, kEncoderWidth, kEncoderHeight);
            const PanoDepth query =
                level == FurnitureLevel::Empty
                    ? layout
                    : render_furnished_depth(furnished, pose, kEncoderWidth, kEncoderHeight);
            const Embedding g = encode(layout_params, layout);
            const Embedding f = encode(query_params, query);
            sum += embedding_distance(f, g);
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

}  // namespace planloc
