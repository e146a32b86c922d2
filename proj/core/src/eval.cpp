#include "planloc/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "planloc/error.hpp"
#include "planloc/kdtree.hpp"
#include "planloc/parallel.hpp"
#include "planloc/render.hpp"
#include "planloc/rng.hpp"

namespace planloc {

std::string method_label(EvalMethod method) {
    switch (method) {
        case EvalMethod::OracleEdges: return "oracle-edges";
        case EvalMethod::OracleDepth: return "oracle-depth";
        case EvalMethod::OracleRelativeDepth: return "oracle-relative_depth";
        case EvalMethod::OracleChamfer: return "oracle-chamfer3d";
        case EvalMethod::OraclePose: return "oracle-pose";
        case EvalMethod::Icp: return "icp";
        case EvalMethod::Retrieval: return "retrieval";
        case EvalMethod::Vdr: return "vdr";
        case EvalMethod::Lpo: return "lpo";
        case EvalMethod::VdrLpo: return "vdr+lpo";
        case EvalMethod::VdrDecode: return "vdr+decode";
        case EvalMethod::Latent: return "latent";
    }
    return "unknown";
}

bool method_is_oracle(EvalMethod method) {
    switch (method) {
        case EvalMethod::OracleEdges:
        case EvalMethod::OracleDepth:
        case EvalMethod::OracleRelativeDepth:
        case EvalMethod::OracleChamfer:
        case EvalMethod::OraclePose:
            return true;
        default:
            return false;
    }
}

bool method_needs_params(EvalMethod method) {
    return !method_is_oracle(method) && method != EvalMethod::Icp;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void validate(const EvalReport& report) {
    for (const EvalRow& row : report.rows) {
        auto in_unit = [&](double f, const char* what) {
            if (!(f >= 0.0 && f <= 1.0)) {
                throw ValidationError("report row '" + row.method + "': " + what +
                                      " outside [0, 1]");
            }
        };
        in_unit(row.layout_r1, "layout recall");
        in_unit(row.pose_r1, "pose recall");
        in_unit(row.correct_room, "correct-room rate");
        in_unit(row.under_1cm, "under_1cm");
        in_unit(row.under_5cm, "under_5cm");
        in_unit(row.under_10cm, "under_10cm");
        in_unit(row.under_1m, "under_1m");
        if (row.under_1cm > row.under_5cm || row.under_5cm > row.under_10cm ||
            row.under_10cm > row.under_1m) {
            throw ValidationError("report row '" + row.method +
                                  "': threshold fractions not monotone");
        }
        if (!row.errors_m.empty()) {
            const double med = median_of(row.errors_m) * 100.0;
            if (std::abs(med - row.median_cm) > 1e-9) {
                throw ValidationError("report row '" + row.method +
                                      "': median inconsistent with error list");
            }
        }
    }
}

namespace {

using Point3 = std::array<double, 3>;

std::vector<Point3> cloud_points(const PointCloud& cloud) {
    std::vector<Point3> pts;
    pts.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) pts.push_back({p.x, p.y, p.z});
    return pts;
}

// Same reduction as chamfer_3d, but against prebuilt trees so one side can be
// cached across many comparisons.
double chamfer_cached(const std::vector<Point3>& a, const KdTree3& tree_a,
                      const std::vector<Point3>& b, const KdTree3& tree_b) {
    double sum_a = 0.0;
    for (const Point3& p : a) sum_a += std::sqrt(tree_b.nearest(p).sq_dist);
    double sum_b = 0.0;
    for (const Point3& p : b) sum_b += std::sqrt(tree_a.nearest(p).sq_dist);
    return sum_a / static_cast<double>(a.size()) + sum_b / static_cast<double>(b.size());
}

std::size_t argmin_index(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[best]) best = i;
    }
    return best;
}

struct PreparedScene {
    FurnishedScene furnished;
    Scene3D scene3;
    std::vector<Pose> queries;
    GridDatabase db;
    std::vector<Pose> starts;              // grid poses, for multi-start ICP
    std::vector<std::vector<Point3>> entry_pts;
    std::vector<KdTree3> entry_trees;
};

PreparedScene prepare_scene(const CorpusConfig& corpus, int scene_index,
                            std::uint64_t scene_seed, const EncoderParams* layout_params,
                            int jobs) {
    PreparedScene out;
    const FloorPlan plan = corpus.ambiguous
                               ? generate_ambiguous_floorplan(scene_seed, corpus.amb)
                               : generate_floorplan(scene_seed, corpus.gen);
    out.queries = sample_query_poses(plan, corpus.queries_per_scene,
                                     sub_seed(corpus.seed, "query", scene_index),
                                     corpus.clearance);
    out.furnished =
        place_furniture(plan, corpus.level, sub_seed(corpus.seed, "furniture", scene_index),
                        out.queries, corpus.clearance);
    out.scene3 = extrude(out.furnished.plan);

    if (layout_params != nullptr) {
        out.db = build_database(out.scene3, corpus.grid_resolution, corpus.clearance,
                                *layout_params, corpus.render_width, corpus.render_height,
                                /*keep_renders=*/true, jobs);
    } else {
        out.db.resolution = corpus.grid_resolution;
        out.db.clearance = corpus.clearance;
        out.db.render_width = corpus.render_width;
        out.db.render_height = corpus.render_height;
        const std::vector<Pose> poses =
            grid_poses(out.furnished.plan, corpus.grid_resolution, corpus.clearance);
        if (poses.empty()) {
            throw ValidationError("evaluation grid has no free-space poses");
        }
        out.db.entries.resize(poses.size());
        out.db.renders.resize(poses.size());
        parallel_for(poses.size(), jobs, [&](std::size_t i) {
            out.db.entries[i].pose = poses[i];
            out.db.entries[i].embedding.setZero();
            out.db.renders[i] = render_layout_depth(out.scene3, poses[i],
                                                    corpus.render_width,
                                                    corpus.render_height);
        });
    }

    const std::size_t n = out.db.entries.size();
    out.starts.reserve(n);
    for (const auto& e : out.db.entries) out.starts.push_back(e.pose);
    out.entry_pts.resize(n);
    out.entry_trees.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.entry_pts[i] = cloud_points(backproject(out.db.renders[i]));
    }
    for (std::size_t i = 0; i < n; ++i) out.entry_trees.emplace_back(out.entry_pts[i]);
    return out;
}

struct Outcome {
    bool layout_hit = false;
    bool pose_hit = false;
    bool room_hit = false;
    double error_m = 0.0;
};

Outcome judge(const PreparedScene& ps, Pose query, std::size_t top_index,
              std::size_t gt_layout_idx, std::size_t gt_pose_idx, Pose final_pose) {
    Outcome o;
    o.layout_hit = top_index == gt_layout_idx;
    o.pose_hit = top_index == gt_pose_idx;
    const int query_room = room_containing(ps.furnished.plan, query.xy());
    const int final_room = room_containing(ps.furnished.plan, final_pose.xy());
    o.room_hit = query_room >= 0 && query_room == final_room;
    o.error_m = pose_distance(final_pose, query);
    return o;
}

void check_suite(const SuiteConfig& config) {
    if (config.corpus.scenes <= 0 || config.corpus.queries_per_scene <= 0) {
        throw ValidationError("empty evaluation corpus");
    }
    if (config.methods.empty()) throw ValidationError("no evaluation methods requested");
    for (EvalMethod m : config.methods) {
        if (method_needs_params(m) &&
            (config.layout_params == nullptr || config.query_params == nullptr)) {
            throw ValidationError("method '" + method_label(m) +
                                  "' requires trained layout and query parameters");
        }
    }
    if (config.layout_params != nullptr) validate(*config.layout_params);
    if (config.query_params != nullptr) validate(*config.query_params);
}

bool any_method(const std::vector<EvalMethod>& methods,
                std::initializer_list<EvalMethod> wanted) {
    for (EvalMethod m : methods) {
        for (EvalMethod w : wanted) {
            if (m == w) return true;
        }
    }
    return false;
}

EvalRow finalize_row(std::string label, const std::vector<Outcome>& outcomes) {
    EvalRow row;
    row.method = std::move(label);
    const double n = static_cast<double>(outcomes.size());
    int layout = 0;
    int pose = 0;
    int room = 0;
    for (const Outcome& o : outcomes) {
        layout += o.layout_hit ? 1 : 0;
        pose += o.pose_hit ? 1 : 0;
        room += o.room_hit ? 1 : 0;
        row.errors_m.push_back(o.error_m);
    }
    row.layout_r1 = layout / n;
    row.pose_r1 = pose / n;
    row.correct_room = room / n;
    row.median_cm = median_of(row.errors_m) * 100.0;
    auto frac_under = [&](double threshold) {
        int c = 0;
        for (double e : row.errors_m) c += e < threshold ? 1 : 0;
        return c / n;
    };
    row.under_1cm = frac_under(0.01);
    row.under_5cm = frac_under(0.05);
    row.under_10cm = frac_under(0.10);
    row.under_1m = frac_under(1.0);
    return row;
}

// Ground truth shared by every method for one query: the Chamfer-nearest
// database entry (layout recall target) and the pose-nearest one.
struct QueryTruth {
    PanoDepth layout_img;
    PanoDepth query_img;  // furnished at the corpus level
    std::vector<double> chamfer;
    std::size_t gt_layout_idx = 0;
    std::size_t gt_pose_idx = 0;
};

QueryTruth compute_truth(const PreparedScene& ps, Pose query, const CorpusConfig& corpus) {
    QueryTruth t;
    t.layout_img = render_layout_depth(ps.scene3, query, corpus.render_width,
                                       corpus.render_height);
    t.query_img = corpus.level == FurnitureLevel::Empty
                      ? t.layout_img
                      : render_furnished_depth(ps.furnished, query, corpus.render_width,
                                               corpus.render_height);
    const std::vector<Point3> qpts = cloud_points(backproject(t.layout_img));
    const KdTree3 qtree(qpts);
    t.chamfer.resize(ps.db.entries.size());
    for (std::size_t i = 0; i < ps.db.entries.size(); ++i) {
        t.chamfer[i] = chamfer_cached(qpts, qtree, ps.entry_pts[i], ps.entry_trees[i]);
    }
    t.gt_layout_idx = argmin_index(t.chamfer);
    std::vector<double> pose_dists(ps.db.entries.size());
    for (std::size_t i = 0; i < ps.db.entries.size(); ++i) {
        pose_dists[i] = pose_distance(ps.db.entries[i].pose, query);
    }
    t.gt_pose_idx = argmin_index(pose_dists);
    return t;
}

}  // namespace

EvalReport evaluate_suite(const SuiteConfig& config) {
    check_suite(config);
    const CorpusConfig& corpus = config.corpus;
    const std::size_t n_methods = config.methods.size();

    const bool needs_vdr = any_method(config.methods, {EvalMethod::Vdr, EvalMethod::VdrLpo,
                                                       EvalMethod::VdrDecode,
                                                       EvalMethod::Latent});
    const bool needs_vdr_lpo =
        any_method(config.methods, {EvalMethod::VdrLpo, EvalMethod::Latent});
    const bool has_params = config.layout_params != nullptr && config.query_params != nullptr;

    EvalReport report;
    report.corpus = corpus;
    std::vector<std::vector<Outcome>> per_method(n_methods);

    for (int s = 0; s < corpus.scenes; ++s) {
        const std::uint64_t scene_seed = sub_seed(corpus.seed, "scene", s);
        report.scene_seeds.push_back(scene_seed);
        const PreparedScene ps = prepare_scene(
            corpus, s, scene_seed, has_params ? config.layout_params : nullptr, config.jobs);

        std::vector<Outcome> outcomes(static_cast<std::size_t>(corpus.queries_per_scene) *
                                      n_methods);
        parallel_for(ps.queries.size(), config.jobs, [&](std::size_t q) {
            const Pose query = ps.queries[q];
            const QueryTruth truth = compute_truth(ps, query, corpus);

            // Shared trained stages.
            std::size_t trained_top = 0;
            RefineResult vdr{};
            LPOResult vdr_lpo;
            LPOResult lpo_only;
            LPOResult vdr_decode;
            Embedding q_emb;
            if (has_params && any_method(config.methods,
                                         {EvalMethod::Retrieval, EvalMethod::Vdr,
                                          EvalMethod::Lpo, EvalMethod::VdrLpo,
                                          EvalMethod::VdrDecode, EvalMethod::Latent})) {
                q_emb = encode(*config.query_params, truth.query_img);
                const std::vector<Ranked> ranked = retrieve_nn(q_emb, ps.db);
                trained_top = ranked.front().index;
                const Pose top_pose = ps.db.entries[trained_top].pose;
                if (needs_vdr) {
                    vdr = vdr_refine(top_pose, q_emb, ps.scene3,
                                     config.pipeline.vdr_radius_factor * ps.db.resolution,
                                     config.pipeline.vdr_samples, *config.layout_params,
                                     corpus.render_width, corpus.render_height);
                }
                if (needs_vdr_lpo) {
                    vdr_lpo = latent_pose_optimize(vdr.pose, q_emb, ps.scene3,
                                                   config.pipeline.lpo,
                                                   *config.layout_params);
                }
                if (any_method(config.methods, {EvalMethod::Lpo})) {
                    lpo_only = latent_pose_optimize(top_pose, q_emb, ps.scene3,
                                                    config.pipeline.lpo,
                                                    *config.layout_params);
                }
                if (any_method(config.methods, {EvalMethod::VdrDecode})) {
                    const PanoDepth decoded = decode(*config.layout_params, q_emb);
                    vdr_decode = decode_refine(vdr.pose, decoded, ps.scene3,
                                               config.pipeline.lpo);
                }
            }

            for (std::size_t m = 0; m < n_methods; ++m) {
                const EvalMethod method = config.methods[m];
                std::size_t top = 0;
                Pose final_pose{};
                switch (method) {
                    case EvalMethod::OracleEdges:
                    case EvalMethod::OracleDepth:
                    case EvalMethod::OracleRelativeDepth: {
                        const MetricKind kind =
                            method == EvalMethod::OracleEdges
                                ? MetricKind::Edges
                                : (method == EvalMethod::OracleDepth
                                       ? MetricKind::Depth
                                       : MetricKind::RelativeDepth);
                        std::vector<double> dists(ps.db.entries.size());
                        for (std::size_t i = 0; i < dists.size(); ++i) {
                            dists[i] =
                                metric_between(kind, truth.layout_img, ps.db.renders[i]);
                        }
                        top = argmin_index(dists);
                        final_pose = ps.db.entries[top].pose;
                        break;
                    }
                    case EvalMethod::OracleChamfer:
                        top = truth.gt_layout_idx;
                        final_pose = ps.db.entries[top].pose;
                        break;
                    case EvalMethod::OraclePose:
                        top = truth.gt_pose_idx;
                        final_pose = ps.db.entries[top].pose;
                        break;
                    case EvalMethod::Icp: {
                        const std::vector<Vec2> scan = horizontal_scan(truth.query_img);
                        const ICPLocalizeResult r =
                            icp_localize(scan, ps.scene3, ps.starts, config.icp, 1);
                        top = r.best_start;
                        final_pose = r.pose;
                        break;
                    }
                    case EvalMethod::Retrieval:
                        top = trained_top;
                        final_pose = ps.db.entries[top].pose;
                        break;
                    case EvalMethod::Vdr:
                        top = trained_top;
                        final_pose = vdr.pose;
                        break;
                    case EvalMethod::Lpo:
                        top = trained_top;
                        final_pose = lpo_only.pose;
                        break;
                    case EvalMethod::VdrLpo:
                    case EvalMethod::Latent:
                        top = trained_top;
                        final_pose = vdr_lpo.pose;
                        break;
                    case EvalMethod::VdrDecode:
                        top = trained_top;
                        final_pose = vdr_decode.pose;
                        break;
                }
                outcomes[q * n_methods + m] =
                    judge(ps, query, top, truth.gt_layout_idx, truth.gt_pose_idx,
                          final_pose);
            }
        });

        for (std::size_t q = 0; q < ps.queries.size(); ++q) {
            for (std::size_t m = 0; m < n_methods; ++m) {
                per_method[m].push_back(outcomes[q * n_methods + m]);
            }
        }
    }

    for (std::size_t m = 0; m < n_methods; ++m) {
        report.rows.push_back(finalize_row(method_label(config.methods[m]), per_method[m]));
    }
    validate(report);
    return report;
}

EvalReport vdr_sweep(const SuiteConfig& config, const std::vector<int>& sample_counts) {
    check_suite(config);
    if (sample_counts.empty()) throw ValidationError("VDR sweep needs sample counts");
    for (int n : sample_counts) {
        if (n < 1) throw ValidationError("VDR sweep sample counts must be >= 1");
    }
    if (config.layout_params == nullptr || config.query_params == nullptr) {
        throw ValidationError("VDR sweep requires trained layout and query parameters");
    }
    const CorpusConfig& corpus = config.corpus;
    const std::size_t n_rows = sample_counts.size() * 2;

    EvalReport report;
    report.corpus = corpus;
    std::vector<std::vector<Outcome>> per_row(n_rows);

    for (int s = 0; s < corpus.scenes; ++s) {
        const std::uint64_t scene_seed = sub_seed(corpus.seed, "scene", s);
        report.scene_seeds.push_back(scene_seed);
        const PreparedScene ps =
            prepare_scene(corpus, s, scene_seed, config.layout_params, config.jobs);

        std::vector<Outcome> outcomes(static_cast<std::size_t>(corpus.queries_per_scene) *
                                      n_rows);
        parallel_for(ps.queries.size(), config.jobs, [&](std::size_t q) {
            const Pose query = ps.queries[q];
            const QueryTruth truth = compute_truth(ps, query, corpus);
            const Embedding q_emb = encode(*config.query_params, truth.query_img);
            const std::vector<Ranked> ranked = retrieve_nn(q_emb, ps.db);
            const std::size_t top = ranked.front().index;
            const Pose top_pose = ps.db.entries[top].pose;
            for (std::size_t k = 0; k < sample_counts.size(); ++k) {
                const RefineResult vdr =
                    vdr_refine(top_pose, q_emb, ps.scene3,
                               config.pipeline.vdr_radius_factor * ps.db.resolution,
                               sample_counts[k], *config.layout_params,
                               corpus.render_width, corpus.render_height);
                const LPOResult lpo = latent_pose_optimize(
                    vdr.pose, q_emb, ps.scene3, config.pipeline.lpo, *config.layout_params);
                outcomes[q * n_rows + 2 * k] = judge(ps, query, top, truth.gt_layout_idx,
                                                     truth.gt_pose_idx, vdr.pose);
                outcomes[q * n_rows + 2 * k + 1] = judge(
                    ps, query, top, truth.gt_layout_idx, truth.gt_pose_idx, lpo.pose);
            }
        });

        for (std::size_t q = 0; q < ps.queries.size(); ++q) {
            for (std::size_t r = 0; r < n_rows; ++r) {
                per_row[r].push_back(outcomes[q * n_rows + r]);
            }
        }
    }

    for (std::size_t k = 0; k < sample_counts.size(); ++k) {
        char label[32];
        std::snprintf(label, sizeof(label), "vdr-n%d", sample_counts[k]);
        report.rows.push_back(finalize_row(label, per_row[2 * k]));
        std::snprintf(label, sizeof(label), "vdr+lpo-n%d", sample_counts[k]);
        report.rows.push_back(finalize_row(label, per_row[2 * k + 1]));
    }
    validate(report);
    return report;
}

EvalReport furniture_sweep(const SuiteConfig& config) {
    EvalReport merged;
    bool first = true;
    for (FurnitureLevel level :
         {FurnitureLevel::Empty, FurnitureLevel::Simple, FurnitureLevel::Full}) {
        SuiteConfig c = config;
        c.corpus.level = level;
        EvalReport r = evaluate_suite(c);
        if (first) {
            merged.corpus = config.corpus;
            merged.scene_seeds = r.scene_seeds;
            first = false;
        }
        for (EvalRow& row : r.rows) {
            row.method += "-" + to_string(level);
            merged.rows.push_back(std::move(row));
        }
    }
    validate(merged);
    return merged;
}

EvalReport resolution_sweep(const SuiteConfig& config,
                            const std::vector<double>& resolutions) {
    if (resolutions.empty()) throw ValidationError("resolution sweep needs grid sizes");
    EvalReport merged;
    bool first = true;
    for (double res : resolutions) {
        if (!(res > 0.0)) throw ValidationError("grid resolution must be positive");
        SuiteConfig c = config;
        c.corpus.grid_resolution = res;
        EvalReport r = evaluate_suite(c);
        if (first) {
            merged.corpus = config.corpus;
            merged.scene_seeds = r.scene_seeds;
            first = false;
        }
        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), "-g%g", res);
        for (EvalRow& row : r.rows) {
            row.method += suffix;
            merged.rows.push_back(std::move(row));
        }
    }
    validate(merged);
    return merged;
}

}  // namespace planloc
