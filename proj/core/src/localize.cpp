#include "planloc/localize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "planloc/error.hpp"
#include "planloc/parallel.hpp"

namespace planloc {

std::vector<Pose> grid_poses(const FloorPlan& plan, double resolution, double clearance) {
    if (!(resolution > 0.0)) throw ValidationError("grid resolution must be positive");
    const Rect bounds = plan_bounds(plan);
    const double ax = bounds.lo.x + clearance + resolution / 2.0;
    const double ay = bounds.lo.y + clearance + resolution / 2.0;
    std::vector<Pose> poses;
    for (double y = ay; y <= bounds.hi.y - clearance + 1e-9; y += resolution) {
        for (double x = ax; x <= bounds.hi.x - clearance + 1e-9; x += resolution) {
            if (in_free_space(plan, Vec2{x, y}, clearance)) poses.push_back(Pose{x, y});
        }
    }
    return poses;
}

GridDatabase build_database(const Scene3D& scene, double resolution, double clearance,
                            const EncoderParams& params, int width, int height,
                            bool keep_renders, int jobs) {
    validate(params);
    GridDatabase db;
    db.resolution = resolution;
    db.clearance = clearance;
    db.render_width = width;
    db.render_height = height;

    const std::vector<Pose> poses = grid_poses(scene.plan, resolution, clearance);
    if (poses.empty()) {
        throw ValidationError("grid database: no free-space poses at resolution " +
                              std::to_string(resolution) + " and clearance " +
                              std::to_string(clearance));
    }
    db.entries.resize(poses.size());
    if (keep_renders) db.renders.resize(poses.size());
    parallel_for(poses.size(), jobs, [&](std::size_t i) {
        PanoDepth render = render_layout_depth(scene, poses[i], width, height);
        db.entries[i].pose = poses[i];
        db.entries[i].embedding = encode(params, render);
        if (keep_renders) db.renders[i] = std::move(render);
    });
    return db;
}

std::vector<Ranked> retrieve_nn(const Embedding& query, const GridDatabase& db) {
    if (db.entries.empty()) throw ValidationError("retrieve_nn: empty database");
    std::vector<Ranked> ranked;
    ranked.reserve(db.entries.size());
    for (std::size_t i = 0; i < db.entries.size(); ++i) {
        ranked.push_back(Ranked{i, embedding_distance(query, db.entries[i].embedding)});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.index < b.index;
    });
    return ranked;
}

std::vector<Pose> vogel_points(Pose center, double radius, int n) {
    if (n < 1) throw ValidationError("vogel_points: n must be >= 1");
    if (!(radius > 0.0)) throw ValidationError("vogel_points: radius must be positive");
    static const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Pose> points;
    points.reserve(static_cast<std::size_t>(n) + 1);
    points.push_back(center);
    for (int i = 1; i <= n; ++i) {
        const double r = radius * std::sqrt(static_cast<double>(i) / n);
        const double theta = 2.0 * M_PI * i * (1.0 - 1.0 / kGolden);
        points.push_back(Pose{center.x + r * std::cos(theta), center.y + r * std::sin(theta)});
    }
    return points;
}

namespace {

constexpr double kVogelClearance = 0.05;

bool pose_ok(const FloorPlan& plan, Pose p, double margin) {
    return in_free_space(plan, p.xy(), margin);
}

// Shared optimizer loop: adaptive-moment steps with a plateau learning-rate
// schedule, window-span convergence, and free-space clamping.
LPOResult optimize_pose(Pose init, const Scene3D& scene, const LPOConfig& config,
                        const std::function<double(Pose)>& cost_at,
                        const std::function<Vec2(Pose)>& analytic_grad) {
    if (config.max_iterations < config.convergence_window) {
        throw ValidationError("LPO: max_iterations must be >= convergence_window");
    }
    if (!(config.plateau_factor > 0.0) || !(config.plateau_factor < 1.0)) {
        throw ValidationError("LPO: plateau_factor must lie in (0, 1)");
    }
    if (!pose_ok(scene.plan, init, config.min_clearance)) {
        throw RenderError("pose optimisation initialized outside free space");
    }

    LPOResult result;
    Pose pose = init;
    double lr = config.initial_step;
    double best_for_plateau = std::numeric_limits<double>::max();
    int patience_used = 0;
    Vec2 m{0.0, 0.0};
    Vec2 v{0.0, 0.0};
    const double beta1 = 0.9;
    const double beta2 = 0.999;
    const double eps = 1e-8;

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        const double cost = cost_at(pose);
        result.trace.push_back(TracePoint{pose, cost});

        // Window-span convergence: the cost has stopped moving.
        if (static_cast<int>(result.trace.size()) > config.convergence_window) {
            double lo = cost;
            double hi = cost;
            for (int k = 0; k <= config.convergence_window; ++k) {
                const double c =
                    result.trace[result.trace.size() - 1 - static_cast<std::size_t>(k)].cost;
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
            if (hi - lo < config.convergence_delta) break;
        }

        // Plateau schedule (relative threshold, as in common LR-on-plateau
        // implementations).
        if (cost < best_for_plateau * (1.0 - config.plateau_threshold)) {
            best_for_plateau = cost;
            patience_used = 0;
        } else {
            best_for_plateau = std::min(best_for_plateau, cost);
            if (++patience_used > config.plateau_patience) {
                lr *= config.plateau_factor;
                patience_used = 0;
            }
        }

        Vec2 grad;
        if (config.gradient_mode == GradientMode::Analytic) {
            grad = analytic_grad(pose);
        } else {
            const double h = config.fd_step;
            auto guarded = [&](Pose p, Pose fallback) {
                return pose_ok(scene.plan, p, config.min_clearance) ? cost_at(p)
                                                                    : cost_at(fallback);
            };
            const double cxp = guarded(Pose{pose.x + h, pose.y}, pose);
            const double cxm = guarded(Pose{pose.x - h, pose.y}, pose);
            const double cyp = guarded(Pose{pose.x, pose.y + h}, pose);
            const double cym = guarded(Pose{pose.x, pose.y - h}, pose);
            grad = Vec2{(cxp - cxm) / (2.0 * h), (cyp - cym) / (2.0 * h)};
        }

        const double t = iter + 1;
        m = m * beta1 + grad * (1.0 - beta1);
        v = Vec2{beta2 * v.x + (1.0 - beta2) * grad.x * grad.x,
                 beta2 * v.y + (1.0 - beta2) * grad.y * grad.y};
        const double mc = 1.0 - std::pow(beta1, t);
        const double vc = 1.0 - std::pow(beta2, t);
        const Vec2 step{-lr * (m.x / mc) / (std::sqrt(v.x / vc) + eps),
                        -lr * (m.y / mc) / (std::sqrt(v.y / vc) + eps)};

        Pose next{pose.x + step.x, pose.y + step.y};
        if (!pose_ok(scene.plan, next, config.min_clearance)) {
            // Shorten the step back toward the last in-bounds point.
            double lo = 0.0;
            double hi = 1.0;
            for (int k = 0; k < 25; ++k) {
                const double mid = 0.5 * (lo + hi);
                const Pose cand{pose.x + mid * step.x, pose.y + mid * step.y};
                if (pose_ok(scene.plan, cand, config.min_clearance)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            next = Pose{pose.x + lo * step.x, pose.y + lo * step.y};
        }
        pose = next;
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < result.trace.size(); ++i) {
        if (result.trace[i].cost < result.trace[best].cost) best = i;
    }
    result.pose = result.trace[best].pose;
    result.cost = result.trace[best].cost;
    return result;
}

}  // namespace

RefineResult vdr_refine(Pose center, const Embedding& query, const Scene3D& scene,
                        double radius, int n, const EncoderParams& params, int width,
                        int height) {
    const std::vector<Pose> candidates = vogel_points(center, radius, n);
    RefineResult best{center, std::numeric_limits<double>::max()};
    for (const Pose& p : candidates) {
        if (!pose_ok(scene.plan, p, kVogelClearance)) continue;
        const Embedding e = encode(params, render_layout_depth(scene, p, width, height));
        const double cost = embedding_distance(query, e);
        if (cost < best.cost) best = RefineResult{p, cost};
    }
    if (best.cost == std::numeric_limits<double>::max()) {
        // Even the center was out of bounds; fall back to scoring it directly.
        const Embedding e = encode(params, render_layout_depth(scene, center, width, height));
        best = RefineResult{center, embedding_distance(query, e)};
    }
    return best;
}

LPOResult latent_pose_optimize(Pose init, const Embedding& query, const Scene3D& scene,
                               const LPOConfig& config, const EncoderParams& params) {
    validate(params);
    auto cost_at = [&](Pose p) {
        const Embedding e =
            encode(params, render_layout_depth(scene, p, kEncoderWidth, kEncoderHeight));
        return embedding_distance(query, e);
    };
    auto analytic_grad = [&](Pose p) -> Vec2 {
        const PanoDepth img =
            render_layout_depth(scene, p, kEncoderWidth, kEncoderHeight);
        const EncodeTrace trace = encode_traced(params, img);
        const double cost = embedding_distance(query, trace.embedding);
        if (cost < 1e-12) return Vec2{0.0, 0.0};
        const Embedding grad_e = (trace.embedding - query) / cost;
        const Eigen::VectorXd grad_pre = backprop_normalize(trace, grad_e);
        const Eigen::VectorXd grad_x = params.weights.transpose() * grad_pre;
        const DepthJacobian jac =
            depth_pose_jacobian(scene, p, kEncoderWidth, kEncoderHeight);
        Vec2 g{0.0, 0.0};
        for (std::size_t i = 0; i < img.depth.size(); ++i) {
            if (!jac.valid[i]) continue;
            const double d = img.depth[i];
            if (d <= kDepthClipMin || d >= kDepthClipMax) continue;  // clipped pixel
            const double gd = grad_x[static_cast<Eigen::Index>(i)] / kDepthClipMax;
            g.x += gd * jac.d_depth_dx[i];
            g.y += gd * jac.d_depth_dy[i];
        }
        return g;
    };
    return optimize_pose(init, scene, config, cost_at, analytic_grad);
}

LPOResult decode_refine(Pose init, const PanoDepth& decoded_query, const Scene3D& scene,
                        const LPOConfig& config) {
    if (decoded_query.width != kEncoderWidth || decoded_query.height != kEncoderHeight) {
        throw ValidationError("decode_refine: decoded image must be encoder-resolution");
    }
    auto clipped_cost = [&](const PanoDepth& render) {
        double sum = 0.0;
        for (std::size_t i = 0; i < render.depth.size(); ++i) {
            const double d = std::clamp(render.depth[i], kDepthClipMin, kDepthClipMax);
            sum += std::abs(decoded_query.depth[i] - d);
        }
        return sum / static_cast<double>(render.depth.size());
    };
    auto cost_at = [&](Pose p) {
        return clipped_cost(render_layout_depth(scene, p, kEncoderWidth, kEncoderHeight));
    };
    auto analytic_grad = [&](Pose p) -> Vec2 {
        const PanoDepth img =
            render_layout_depth(scene, p, kEncoderWidth, kEncoderHeight);
        const DepthJacobian jac =
            depth_pose_jacobian(scene, p, kEncoderWidth, kEncoderHeight);
        const double inv_n = 1.0 / static_cast<double>(img.depth.size());
        Vec2 g{0.0, 0.0};
        for (std::size_t i = 0; i < img.depth.size(); ++i) {
            if (!jac.valid[i]) continue;
            const double d = img.depth[i];
            if (d <= kDepthClipMin || d >= kDepthClipMax) continue;
            const double resid = d - decoded_query.depth[i];
            const double sign = resid > 0.0 ? 1.0 : (resid < 0.0 ? -1.0 : 0.0);
            g.x += sign * inv_n * jac.d_depth_dx[i];
            g.y += sign * inv_n * jac.d_depth_dy[i];
        }
        return g;
    };
    return optimize_pose(init, scene, config, cost_at, analytic_grad);
}

LocalizationResult localize_full(const PanoDepth& query_depth, const Scene3D& scene,
                                 const GridDatabase& db, const EncoderParams& query_params,
                                 const EncoderParams& layout_params,
                                 const PipelineConfig& config) {
    const Embedding query = encode(query_params, query_depth);
    const std::vector<Ranked> ranked = retrieve_nn(query, db);

    LocalizationResult result;
    result.retrieved_index = ranked.front().index;
    result.retrieved_pose = db.entries[ranked.front().index].pose;
    result.retrieved_cost = ranked.front().distance;

    Pose current = result.retrieved_pose;
    double current_cost = result.retrieved_cost;
    if (config.use_vdr) {
        const RefineResult r =
            vdr_refine(current, query, scene, config.vdr_radius_factor * db.resolution,
                       config.vdr_samples, layout_params, db.render_width, db.render_height);
        current = r.pose;
        current_cost = r.cost;
    }
    result.vdr_pose = current;
    result.vdr_cost = current_cost;

    if (config.use_decode) {
        const PanoDepth decoded = decode(layout_params, query);
        const LPOResult r = decode_refine(current, decoded, scene, config.lpo);
        current = r.pose;
        current_cost = r.cost;
        result.lpo_trace = r.trace;
    } else if (config.use_lpo) {
        const LPOResult r = latent_pose_optimize(current, query, scene, config.lpo,
                                                 layout_params);
        current = r.pose;
        current_cost = r.cost;
        result.lpo_trace = r.trace;
    }
    result.refined_pose = current;
    result.refined_cost = current_cost;
    return result;
}

}  // namespace planloc
