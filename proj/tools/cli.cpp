#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "planloc/depth_io.hpp"
#include "planloc/embed.hpp"
#include "planloc/embed_io.hpp"
#include "planloc/error.hpp"
#include "planloc/eval.hpp"
#include "planloc/localize.hpp"
#include "planloc/metrics.hpp"
#include "planloc/parallel.hpp"
#include "planloc/render.hpp"
#include "planloc/report.hpp"
#include "planloc/rng.hpp"
#include "planloc/scene.hpp"
#include "planloc/scene_io.hpp"
#include "planloc/train.hpp"

namespace planloc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Post-parse argument problems (missing cross-option requirements and the
// like); CLI11 only covers per-option checks.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw Error("cannot write " + path.string());
}

void write_manifest(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json pose_json(Pose p) { return json{{"x", p.x}, {"y", p.y}}; }

json gen_json(const GenParams& g) {
    return json{{"bounds_width", g.bounds_width},
                {"bounds_height", g.bounds_height},
                {"min_room_side", g.min_room_side},
                {"room_count_min", g.room_count_min},
                {"room_count_max", g.room_count_max},
                {"merge_probability", g.merge_probability},
                {"ceiling_height", g.ceiling_height},
                {"camera_height", g.camera_height}};
}

json amb_json(const AmbiguousParams& a) {
    return json{{"room_width", a.room_width},   {"room_depth", a.room_depth},
                {"rows", a.rows},               {"cols", a.cols},
                {"jitter", a.jitter},           {"ceiling_height", a.ceiling_height},
                {"camera_height", a.camera_height}};
}

// ---- scene sources ---------------------------------------------------------

// Scenes either come from a directory of plan files or are generated from the
// master seed with the same per-index derivation `generate` uses, so training
// on --scenes N --seed S sees exactly the corpus `generate` would write.
struct SceneSource {
    int scenes = 8;
    std::uint64_t seed = 0;
    std::string dir;
    bool ambiguous = false;
    GenParams gen;
    AmbiguousParams amb;
};

void add_gen_options(CLI::App* cmd, GenParams& g, AmbiguousParams& a) {
    cmd->add_option("--bounds-width", g.bounds_width, "Plan bounds width, meters")
        ->capture_default_str();
    cmd->add_option("--bounds-height", g.bounds_height, "Plan bounds height, meters")
        ->capture_default_str();
    cmd->add_option("--min-room-side", g.min_room_side, "Minimum room side, meters")
        ->capture_default_str();
    cmd->add_option("--rooms-min", g.room_count_min, "Minimum room count")->capture_default_str();
    cmd->add_option("--rooms-max", g.room_count_max, "Maximum room count")->capture_default_str();
    cmd->add_option("--merge-prob", g.merge_probability, "Chance of an L-shaped merge")
        ->capture_default_str();
    cmd->add_option("--room-width", a.room_width, "Ambiguous grid: room width, meters")
        ->capture_default_str();
    cmd->add_option("--room-depth", a.room_depth, "Ambiguous grid: room depth, meters")
        ->capture_default_str();
    cmd->add_option("--rows", a.rows, "Ambiguous grid: rows")->capture_default_str();
    cmd->add_option("--cols", a.cols, "Ambiguous grid: columns")->capture_default_str();
    cmd->add_option("--jitter", a.jitter, "Ambiguous grid: dimension jitter, meters")
        ->capture_default_str();
    auto* ceiling = cmd->add_option("--ceiling", g.ceiling_height, "Ceiling height, meters")
                        ->capture_default_str();
    auto* camera = cmd->add_option("--camera", g.camera_height, "Camera height, meters")
                       ->capture_default_str();
    // The two plan families share the height options; conversion errors are
    // reported by the bound option itself.
    ceiling->each([&a](const std::string& s) {
        try {
            a.ceiling_height = std::stod(s);
        } catch (...) {
        }
    });
    camera->each([&a](const std::string& s) {
        try {
            a.camera_height = std::stod(s);
        } catch (...) {
        }
    });
}

void add_scene_source(CLI::App* cmd, SceneSource& s) {
    cmd->add_option("--scenes", s.scenes, "Number of procedural scenes")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    cmd->add_option("--seed", s.seed, "Master seed")->capture_default_str();
    cmd->add_option("--scenes-dir", s.dir, "Directory of plan files to load instead");
    cmd->add_flag("--ambiguous", s.ambiguous, "Generate near-duplicate room grids");
    add_gen_options(cmd, s.gen, s.amb);
}

FloorPlan plan_at(const SceneSource& s, int index) {
    const std::uint64_t scene_seed = sub_seed(s.seed, "scene", static_cast<std::uint64_t>(index));
    return s.ambiguous ? generate_ambiguous_floorplan(scene_seed, s.amb)
                       : generate_floorplan(scene_seed, s.gen);
}

std::vector<fs::path> plan_files_in(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("scene directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const fs::path p = entry.path();
        if (p.extension() != ".json") continue;
        if (p.filename().string().find("manifest") != std::string::npos) continue;
        files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no plan files in " + dir.string());
    return files;
}

std::vector<FloorPlan> resolve_scenes(const SceneSource& s, json& manifest) {
    std::vector<FloorPlan> plans;
    if (!s.dir.empty()) {
        json files = json::array();
        for (const fs::path& p : plan_files_in(s.dir)) {
            plans.push_back(load_scene(p).plan);
            files.push_back(p.filename().string());
        }
        manifest["scenes_dir"] = s.dir;
        manifest["scene_files"] = std::move(files);
    } else {
        json seeds = json::array();
        for (int i = 0; i < s.scenes; ++i) {
            plans.push_back(plan_at(s, i));
            seeds.push_back(sub_seed(s.seed, "scene", static_cast<std::uint64_t>(i)));
        }
        manifest["scenes"] = s.scenes;
        manifest["seed"] = s.seed;
        manifest["ambiguous"] = s.ambiguous;
        manifest[s.ambiguous ? "ambiguous_params" : "gen_params"] =
            s.ambiguous ? amb_json(s.amb) : gen_json(s.gen);
        manifest["scene_seeds"] = std::move(seeds);
    }
    return plans;
}

// ---- generate ---------------------------------------------------------------

struct GenerateOpts {
    std::string out;
    std::string furniture = "empty";
    SceneSource src;
};

int cmd_generate(const GenerateOpts& o, std::ostream& out) {
    const FurnitureLevel level = furniture_level_from_string(o.furniture);
    fs::create_directories(o.out);

    json files = json::array();
    for (int i = 0; i < o.src.scenes; ++i) {
        const std::uint64_t scene_seed =
            sub_seed(o.src.seed, "scene", static_cast<std::uint64_t>(i));
        const FloorPlan plan = plan_at(o.src, i);
        FurnishedScene scene;
        if (level == FurnitureLevel::Empty) {
            scene.plan = plan;
        } else {
            scene = place_furniture(plan, level,
                                    sub_seed(o.src.seed, "furniture", static_cast<std::uint64_t>(i)));
        }
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%03d.json", i);
        save_scene(scene, fs::path(o.out) / name);
        files.push_back(json{{"file", name}, {"seed", scene_seed}});
    }

    json manifest{{"command", "generate"},
                  {"out", o.out},
                  {"scenes", o.src.scenes},
                  {"seed", o.src.seed},
                  {"furniture", to_string(level)},
                  {"ambiguous", o.src.ambiguous},
                  {"files", std::move(files)}};
    manifest[o.src.ambiguous ? "ambiguous_params" : "gen_params"] =
        o.src.ambiguous ? amb_json(o.src.amb) : gen_json(o.src.gen);
    write_manifest(fs::path(o.out) / "manifest.json", manifest);

    out << "wrote " << o.src.scenes << " scenes to " << o.out << "\n";
    return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainOpts {
    std::string out;
    std::string layout_file;  // query stage: teacher parameters
    std::string loss = "l2";
    SceneSource src;
    TrainConfig config;
};

void add_train_options(CLI::App* cmd, TrainOpts& o) {
    cmd->add_option("--out", o.out, "Output parameters file")->required();
    add_scene_source(cmd, o.src);
    cmd->add_option("--epochs", o.config.epochs, "Training epochs")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    cmd->add_option("--lr", o.config.lr, "Learning rate")->capture_default_str();
    cmd->add_option("--decay-factor", o.config.decay_factor, "LR decay at 50% and 75%")
        ->capture_default_str();
    cmd->add_option("--batch-anchors", o.config.batch_anchors, "Anchors per update")
        ->capture_default_str();
    cmd->add_option("--n-neg", o.config.n_neg, "Negatives per anchor")->capture_default_str();
    cmd->add_option("--pos-radius", o.config.pos_radius, "Positive radius, meters")
        ->capture_default_str();
    cmd->add_option("--neg-radius", o.config.neg_radius, "Negative radius, meters")
        ->capture_default_str();
    cmd->add_option("--poses-per-scene", o.config.poses_per_scene, "Base poses per scene")
        ->capture_default_str();
    cmd->add_option("--anchors-per-epoch", o.config.anchors_per_epoch, "Anchors per epoch")
        ->capture_default_str();
}

json train_manifest(const char* command, const TrainOpts& o, const TrainResult& result) {
    json manifest{{"command", command},
                  {"out", o.out},
                  {"config",
                   {{"epochs", o.config.epochs},
                    {"lr", o.config.lr},
                    {"decay_factor", o.config.decay_factor},
                    {"batch_anchors", o.config.batch_anchors},
                    {"n_neg", o.config.n_neg},
                    {"pos_radius", o.config.pos_radius},
                    {"neg_radius", o.config.neg_radius},
                    {"poses_per_scene", o.config.poses_per_scene},
                    {"anchors_per_epoch", o.config.anchors_per_epoch},
                    {"query_batch", o.config.query_batch},
                    {"seed", o.config.seed}}},
                  {"epoch_loss", result.epoch_loss}};
    return manifest;
}

int cmd_train_layout(TrainOpts& o, std::ostream& out) {
    json manifest;
    const std::vector<FloorPlan> scenes = resolve_scenes(o.src, manifest);
    o.config.seed = o.src.seed;
    const TrainResult result = train_layout_branch(scenes, o.config);
    save_params(result.params, o.out);

    json full = train_manifest("train-layout", o, result);
    full.update(manifest);
    write_manifest(o.out + ".manifest.json", full);

    out << "trained layout branch on " << scenes.size() << " scenes, " << o.config.epochs
        << " epochs, final loss " << result.epoch_loss.back() << "; wrote " << o.out << "\n";
    return 0;
}

int cmd_train_query(TrainOpts& o, std::ostream& out) {
    json manifest;
    const std::vector<FloorPlan> scenes = resolve_scenes(o.src, manifest);
    o.config.seed = o.src.seed;
    const EncoderParams layout = load_params(o.layout_file);
    const QueryLoss loss = query_loss_from_string(o.loss);
    const TrainResult result = train_query_branch(scenes, layout, loss, o.config);
    save_params(result.params, o.out);

    json full = train_manifest("train-query", o, result);
    full["layout_params"] = o.layout_file;
    full["loss"] = o.loss;
    full.update(manifest);
    write_manifest(o.out + ".manifest.json", full);

    out << "trained query branch (" << o.loss << ") on " << scenes.size() << " scenes, "
        << o.config.epochs << " epochs, final loss " << result.epoch_loss.back() << "; wrote "
        << o.out << "\n";
    return 0;
}

// ---- render -----------------------------------------------------------------

struct RenderOpts {
    std::string plan, out;
    std::vector<double> pose;
    int width = kEncoderWidth;
    int height = kEncoderHeight;
    bool layout_only = false;
};

int cmd_render(const RenderOpts& o, std::ostream& out) {
    const FurnishedScene scene = load_scene(o.plan);
    const Pose pose{o.pose[0], o.pose[1]};
    const bool furnished = !o.layout_only && !scene.furniture.empty();
    const PanoDepth img =
        furnished ? render_furnished_depth(scene, pose, o.width, o.height)
                  : render_layout_depth(extrude(scene.plan), pose, o.width, o.height);
    save_depth(img, o.out);

    write_manifest(o.out + ".manifest.json", json{{"command", "render"},
                                                  {"plan", o.plan},
                                                  {"pose", pose_json(pose)},
                                                  {"width", o.width},
                                                  {"height", o.height},
                                                  {"furnished", furnished},
                                                  {"out", o.out}});
    out << "wrote " << o.width << "x" << o.height << " depth image to " << o.out << "\n";
    return 0;
}

// ---- localize -----------------------------------------------------------------

struct LocalizeOpts {
    std::string plan, layout, query, out;
    std::vector<double> query_pose;
    std::string query_depth;
    std::string furniture;  // override clutter for the synthetic query render
    std::uint64_t furniture_seed = 0;
    double grid = 0.5;
    double clearance = 0.3;
    int width = kEncoderWidth;
    int height = kEncoderHeight;
    std::string gradient = "fd";
    int jobs = 1;
    PipelineConfig pipe;
};

GradientMode gradient_from_string(const std::string& s) {
    if (s == "fd") return GradientMode::FiniteDifference;
    if (s == "analytic") return GradientMode::Analytic;
    throw UsageError("unknown gradient mode '" + s + "' (expected fd|analytic)");
}

int cmd_localize(LocalizeOpts& o, std::ostream& out) {
    if (o.query_pose.empty() && o.query_depth.empty()) {
        throw UsageError("either --query-pose or --query-depth is required");
    }
    o.pipe.lpo.gradient_mode = gradient_from_string(o.gradient);

    const FurnishedScene scene = load_scene(o.plan);
    const Scene3D scene3 = extrude(scene.plan);
    const EncoderParams layout_params = load_params(o.layout);
    if (layout_params.branch != Branch::Layout) {
        throw ValidationError("--layout must hold layout-branch parameters");
    }
    const EncoderParams query_params = load_params(o.query);

    json query_info;
    std::optional<Pose> gt;
    PanoDepth query_img;
    if (!o.query_depth.empty()) {
        query_img = load_depth(o.query_depth);
        query_info["depth_file"] = o.query_depth;
    } else {
        gt = Pose{o.query_pose[0], o.query_pose[1]};
        query_info["pose"] = pose_json(*gt);
        if (!o.furniture.empty()) {
            const FurnitureLevel level = furniture_level_from_string(o.furniture);
            query_info["furniture"] = to_string(level);
            if (level == FurnitureLevel::Empty) {
                query_img = render_layout_depth(scene3, *gt, o.width, o.height);
            } else {
                const Pose avoid[] = {*gt};
                const FurnishedScene furnished =
                    place_furniture(scene.plan, level, o.furniture_seed, avoid);
                query_info["furniture_seed"] = o.furniture_seed;
                query_img = render_furnished_depth(furnished, *gt, o.width, o.height);
            }
        } else if (!scene.furniture.empty()) {
            query_info["furniture"] = to_string(scene.level);
            query_img = render_furnished_depth(scene, *gt, o.width, o.height);
        } else {
            query_img = render_layout_depth(scene3, *gt, o.width, o.height);
        }
    }

    const GridDatabase db = build_database(scene3, o.grid, o.clearance, layout_params, o.width,
                                           o.height, /*keep_renders=*/true, o.jobs);
    LocalizationResult r = localize_full(query_img, scene3, db, query_params, layout_params, o.pipe);
    r.gt_pose = gt;

    json stages{{"retrieval",
                 {{"pose", pose_json(r.retrieved_pose)},
                  {"cost", r.retrieved_cost},
                  {"index", r.retrieved_index}}}};
    if (o.pipe.use_vdr) stages["vdr"] = {{"pose", pose_json(r.vdr_pose)}, {"cost", r.vdr_cost}};
    if (o.pipe.use_lpo || o.pipe.use_decode) {
        stages["refine"] = {{"pose", pose_json(r.refined_pose)},
                            {"cost", r.refined_cost},
                            {"mode", o.pipe.use_decode ? "decode" : "lpo"}};
    }
    json trace = json::array();
    for (const TracePoint& t : r.lpo_trace) {
        trace.push_back(json{{"x", t.pose.x}, {"y", t.pose.y}, {"cost", t.cost}});
    }

    json result{{"command", "localize"},
                {"plan", o.plan},
                {"config",
                 {{"grid", o.grid},
                  {"clearance", o.clearance},
                  {"width", o.width},
                  {"height", o.height},
                  {"use_vdr", o.pipe.use_vdr},
                  {"use_lpo", o.pipe.use_lpo},
                  {"use_decode", o.pipe.use_decode},
                  {"vdr_samples", o.pipe.vdr_samples},
                  {"vdr_radius_factor", o.pipe.vdr_radius_factor},
                  {"gradient", o.gradient},
                  {"layout_params", o.layout},
                  {"query_params", o.query}}},
                {"query", std::move(query_info)},
                {"stages", std::move(stages)},
                {"final", {{"pose", pose_json(r.refined_pose)}, {"cost", r.refined_cost}}},
                {"lpo_trace", std::move(trace)}};
    if (gt) {
        const double err = pose_distance(*gt, r.refined_pose);
        result["gt"] = {{"pose", pose_json(*gt)}, {"error_m", err}};
    }
    write_text(o.out, result.dump(2) + "\n");

    out << "final pose (" << r.refined_pose.x << ", " << r.refined_pose.y << ")";
    if (gt) out << ", error " << pose_distance(*gt, r.refined_pose) << " m";
    out << "; wrote " << o.out << "\n";
    return 0;
}

// ---- eval ---------------------------------------------------------------------

struct EvalOpts {
    std::string out;
    std::string layout, query;
    std::string level = "empty";
    CorpusConfig corpus;
    bool ablation_ambiguous = true;  // metric ablation defaults to near-duplicate rooms
    int jobs = 1;
    std::vector<double> grids = {0.5, 1.0};
    std::vector<int> counts = {1, 10, 50, 200};
};

void add_corpus_options(CLI::App* cmd, EvalOpts& o) {
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->add_option("--scenes", o.corpus.scenes, "Corpus scenes")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    cmd->add_option("--queries", o.corpus.queries_per_scene, "Queries per scene")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    cmd->add_option("--grid", o.corpus.grid_resolution, "Grid resolution, meters")
        ->capture_default_str();
    cmd->add_option("--clearance", o.corpus.clearance, "Wall clearance, meters")
        ->capture_default_str();
    cmd->add_option("--level", o.level, "Query furniture level: empty|simple|full")
        ->capture_default_str();
    cmd->add_option("--seed", o.corpus.seed, "Master seed")->capture_default_str();
    cmd->add_option("--jobs", o.jobs, "Worker threads")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    add_gen_options(cmd, o.corpus.gen, o.corpus.amb);
}

json corpus_json(const CorpusConfig& c) {
    return json{{"scenes", c.scenes},
                {"queries_per_scene", c.queries_per_scene},
                {"grid_resolution", c.grid_resolution},
                {"clearance", c.clearance},
                {"level", to_string(c.level)},
                {"ambiguous", c.ambiguous},
                {"seed", c.seed},
                {"render_width", c.render_width},
                {"render_height", c.render_height},
                {"gen_params", gen_json(c.gen)},
                {"ambiguous_params", amb_json(c.amb)}};
}

int write_eval_outputs(const char* command, const EvalOpts& o, const SuiteConfig& cfg,
                       const EvalReport& report, std::ostream& out) {
    validate(report);
    const std::string csv = export_report_csv(report);
    const std::string md = export_report_markdown(report);
    write_text(fs::path(o.out) / "report.csv", csv);
    write_text(fs::path(o.out) / "report.md", md);

    json rows = json::array();
    for (const EvalRow& row : report.rows) {
        rows.push_back(json{{"method", row.method}, {"correct_room", row.correct_room}});
    }
    json manifest{{"command", command},
                  {"out", o.out},
                  {"corpus", corpus_json(report.corpus)},
                  {"jobs", cfg.jobs},
                  {"scene_seeds", report.scene_seeds},
                  {"rows", std::move(rows)}};
    if (!o.layout.empty()) manifest["layout_params"] = o.layout;
    if (!o.query.empty()) manifest["query_params"] = o.query;
    write_manifest(fs::path(o.out) / "manifest.json", manifest);

    out << md << "wrote " << o.out << "/report.csv, report.md, manifest.json\n";
    return 0;
}

int cmd_eval(const char* name, EvalOpts& o, std::ostream& out) {
    o.corpus.level = furniture_level_from_string(o.level);

    SuiteConfig cfg;
    cfg.corpus = o.corpus;
    cfg.jobs = o.jobs;

    EncoderParams layout_params, query_params;
    if (!o.layout.empty()) {
        layout_params = load_params(o.layout);
        cfg.layout_params = &layout_params;
    }
    if (!o.query.empty()) {
        query_params = load_params(o.query);
        cfg.query_params = &query_params;
    }

    const std::string cmd = name;
    if (cmd == "metric-ablation") cfg.corpus.ambiguous = o.ablation_ambiguous;
    EvalReport report;
    if (cmd == "main") {
        cfg.methods = {EvalMethod::OracleChamfer, EvalMethod::Icp, EvalMethod::Latent};
        report = evaluate_suite(cfg);
    } else if (cmd == "metric-ablation") {
        cfg.methods = {EvalMethod::OracleEdges, EvalMethod::OracleDepth,
                       EvalMethod::OracleRelativeDepth, EvalMethod::OracleChamfer,
                       EvalMethod::OraclePose};
        report = evaluate_suite(cfg);
    } else if (cmd == "furniture") {
        cfg.methods = {EvalMethod::Icp, EvalMethod::Latent};
        report = furniture_sweep(cfg);
    } else if (cmd == "grid-resolution") {
        cfg.methods = {EvalMethod::OracleChamfer, EvalMethod::Latent};
        report = resolution_sweep(cfg, o.grids);
    } else {
        cfg.methods = {EvalMethod::Latent};
        report = vdr_sweep(cfg, o.counts);
    }
    return write_eval_outputs(("eval-" + cmd).c_str(), o, cfg, report, out);
}

// ---- plot -----------------------------------------------------------------------

struct PlotOpts {
    std::string plan, out, layout;
    std::string metric = "chamfer3d";
    std::vector<double> query_pose;
    std::uint64_t seed = 0;
    double grid = 0.25;
    double clearance = 0.3;
    int width = kEncoderWidth;
    int height = kEncoderHeight;
    int jobs = 1;
};

int cmd_plot(const PlotOpts& o, std::ostream& out) {
    if (o.metric == "latent" && o.layout.empty()) {
        throw UsageError("--metric latent requires --layout");
    }
    const FurnishedScene scene = load_scene(o.plan);
    const Scene3D scene3 = extrude(scene.plan);
    const std::vector<Pose> grid = grid_poses(scene.plan, o.grid, o.clearance);
    if (grid.empty()) throw Error("no grid poses fit the plan at this resolution");

    const Pose query = o.query_pose.empty()
                           ? sample_query_poses(scene.plan, 1, sub_seed(o.seed, "plot-query", 0),
                                                o.clearance)[0]
                           : Pose{o.query_pose[0], o.query_pose[1]};
    const PanoDepth query_img = render_layout_depth(scene3, query, o.width, o.height);

    std::vector<double> distances(grid.size());
    if (o.metric == "latent") {
        const EncoderParams params = load_params(o.layout);
        const Embedding query_e = encode(params, query_img);
        parallel_for(grid.size(), o.jobs, [&](std::size_t i) {
            const PanoDepth img = render_layout_depth(scene3, grid[i], o.width, o.height);
            distances[i] = (encode(params, img) - query_e).norm();
        });
    } else {
        const MetricKind kind = metric_kind_from_string(o.metric);
        parallel_for(grid.size(), o.jobs, [&](std::size_t i) {
            const PanoDepth img = render_layout_depth(scene3, grid[i], o.width, o.height);
            distances[i] = metric_between(kind, query_img, img);
        });
    }

    write_text(o.out, distance_field_svg(scene.plan, grid, distances, o.grid, query));
    write_manifest(o.out + ".manifest.json", json{{"command", "plot"},
                                                  {"plan", o.plan},
                                                  {"metric", o.metric},
                                                  {"grid", o.grid},
                                                  {"clearance", o.clearance},
                                                  {"query", pose_json(query)},
                                                  {"cells", grid.size()},
                                                  {"out", o.out}});
    out << "wrote " << o.metric << " field over " << grid.size() << " cells to " << o.out << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Floor-plan localisation toolkit"};
    app.require_subcommand(1);

    GenerateOpts gen_opts;
    CLI::App* c_generate = app.add_subcommand("generate", "Write procedural scene files");
    c_generate->add_option("--out", gen_opts.out, "Output directory")->required();
    c_generate->add_option("--furniture", gen_opts.furniture, "Clutter level: empty|simple|full")
        ->capture_default_str();
    add_scene_source(c_generate, gen_opts.src);

    TrainOpts layout_opts;
    TrainOpts query_opts;
    query_opts.config.epochs = 50;  // stage two default; stage one keeps 20
    CLI::App* c_train = app.add_subcommand("train", "Fit encoder parameters");
    c_train->require_subcommand(1);
    CLI::App* c_train_layout =
        c_train->add_subcommand("layout", "Stage one: layout branch with decoder");
    add_train_options(c_train_layout, layout_opts);
    CLI::App* c_train_query =
        c_train->add_subcommand("query", "Stage two: query branch against a frozen teacher");
    add_train_options(c_train_query, query_opts);
    c_train_query->add_option("--layout", query_opts.layout_file, "Trained layout parameters")
        ->required();
    c_train_query->add_option("--loss", query_opts.loss, "Objective: l2|log_ratio_cross|kd_lr")
        ->capture_default_str();
    c_train_query->add_option("--query-batch", query_opts.config.query_batch, "L2 batch size")
        ->capture_default_str();

    RenderOpts render_opts;
    CLI::App* c_render = app.add_subcommand("render", "Render a depth panorama at a pose");
    c_render->add_option("--plan", render_opts.plan, "Scene file")->required();
    c_render->add_option("--pose", render_opts.pose, "Camera position: X Y")
        ->expected(2)
        ->required();
    c_render->add_option("--out", render_opts.out, "Output depth file")->required();
    c_render->add_option("--width", render_opts.width, "Image width")->capture_default_str();
    c_render->add_option("--height", render_opts.height, "Image height")->capture_default_str();
    c_render->add_flag("--layout-only", render_opts.layout_only, "Ignore the scene's furniture");

    LocalizeOpts loc_opts;
    CLI::App* c_localize = app.add_subcommand("localize", "Run the retrieve-then-refine pipeline");
    c_localize->add_option("--plan", loc_opts.plan, "Scene file")->required();
    c_localize->add_option("--layout", loc_opts.layout, "Layout-branch parameters")->required();
    c_localize->add_option("--query", loc_opts.query, "Query-branch parameters")->required();
    c_localize->add_option("--out", loc_opts.out, "Output result file")->required();
    CLI::Option* opt_pose =
        c_localize->add_option("--query-pose", loc_opts.query_pose, "Render the query here: X Y")
            ->expected(2);
    c_localize->add_option("--query-depth", loc_opts.query_depth, "Load the query panorama")
        ->excludes(opt_pose);
    c_localize->add_option("--furniture", loc_opts.furniture,
                           "Clutter level for the synthetic query: empty|simple|full");
    c_localize->add_option("--furniture-seed", loc_opts.furniture_seed, "Clutter placement seed")
        ->capture_default_str();
    c_localize->add_option("--grid", loc_opts.grid, "Grid resolution, meters")
        ->capture_default_str();
    c_localize->add_option("--clearance", loc_opts.clearance, "Wall clearance, meters")
        ->capture_default_str();
    c_localize->add_option("--width", loc_opts.width, "Render width")->capture_default_str();
    c_localize->add_option("--height", loc_opts.height, "Render height")->capture_default_str();
    c_localize->add_flag("--vdr,!--no-vdr", loc_opts.pipe.use_vdr, "Disc resampling stage")
        ->capture_default_str();
    c_localize->add_flag("--lpo,!--no-lpo", loc_opts.pipe.use_lpo, "Gradient refinement stage")
        ->capture_default_str();
    c_localize->add_flag("--decode", loc_opts.pipe.use_decode,
                         "Refine against the decoded query instead of the embedding");
    c_localize->add_option("--vdr-samples", loc_opts.pipe.vdr_samples, "Disc sample count")
        ->capture_default_str();
    c_localize->add_option("--vdr-radius-factor", loc_opts.pipe.vdr_radius_factor,
                           "Disc radius as a multiple of the grid resolution")
        ->capture_default_str();
    c_localize->add_option("--lpo-step", loc_opts.pipe.lpo.initial_step, "Initial step, meters")
        ->capture_default_str();
    c_localize->add_option("--lpo-max-iters", loc_opts.pipe.lpo.max_iterations, "Iteration cap")
        ->capture_default_str();
    c_localize->add_option("--gradient", loc_opts.gradient, "Pose gradient: fd|analytic")
        ->capture_default_str();
    c_localize->add_option("--jobs", loc_opts.jobs, "Worker threads for the grid database")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();

    EvalOpts eval_opts;
    CLI::App* c_eval = app.add_subcommand("eval", "Score methods over a procedural corpus");
    c_eval->require_subcommand(1);
    const auto add_eval_sub = [&](const char* name, const char* desc, bool needs_params) {
        CLI::App* sub = c_eval->add_subcommand(name, desc);
        add_corpus_options(sub, eval_opts);
        auto* lay = sub->add_option("--layout", eval_opts.layout, "Layout-branch parameters");
        auto* qry = sub->add_option("--query", eval_opts.query, "Query-branch parameters");
        if (needs_params) {
            lay->required();
            qry->required();
        }
        return sub;
    };
    add_eval_sub("main", "Chamfer oracle, scan alignment, and the trained pipeline", true);
    CLI::App* c_ablation = add_eval_sub(
        "metric-ablation", "Rank layout-similarity metrics on near-duplicate rooms", false);
    c_ablation->add_flag("--ambiguous,!--no-ambiguous", eval_opts.ablation_ambiguous,
                         "Use near-duplicate room grids (default on)");
    add_eval_sub("furniture", "Clutter sweep: empty, simple, full", true);
    CLI::App* c_grid_sweep =
        add_eval_sub("grid-resolution", "Grid density sweep", true);
    c_grid_sweep->add_option("--grids", eval_opts.grids, "Resolutions to sweep, meters")
        ->expected(-1)
        ->capture_default_str();
    CLI::App* c_vdr_sweep = add_eval_sub("vdr-sweep", "Disc sample-count sweep", true);
    c_vdr_sweep->add_option("--counts", eval_opts.counts, "Sample counts to sweep")
        ->expected(-1)
        ->capture_default_str();

    PlotOpts plot_opts;
    CLI::App* c_plot = app.add_subcommand("plot", "Distance field figure over the plan grid");
    c_plot->add_option("--plan", plot_opts.plan, "Scene file")->required();
    c_plot->add_option("--out", plot_opts.out, "Output SVG file")->required();
    c_plot->add_option("--metric", plot_opts.metric,
                       "edges|depth|relative_depth|chamfer3d|latent")
        ->capture_default_str();
    c_plot->add_option("--layout", plot_opts.layout, "Layout parameters (latent metric)");
    c_plot->add_option("--query-pose", plot_opts.query_pose, "Query position: X Y")->expected(2);
    c_plot->add_option("--seed", plot_opts.seed, "Seed for the sampled query pose")
        ->capture_default_str();
    c_plot->add_option("--grid", plot_opts.grid, "Cell size, meters")->capture_default_str();
    c_plot->add_option("--clearance", plot_opts.clearance, "Wall clearance, meters")
        ->capture_default_str();
    c_plot->add_option("--jobs", plot_opts.jobs, "Worker threads")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);  // CLI11 consumes the argument vector back-to-front
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (c_generate->parsed()) return cmd_generate(gen_opts, out);
        if (c_train->parsed()) {
            if (c_train_layout->parsed()) return cmd_train_layout(layout_opts, out);
            return cmd_train_query(query_opts, out);
        }
        if (c_render->parsed()) return cmd_render(render_opts, out);
        if (c_localize->parsed()) return cmd_localize(loc_opts, out);
        if (c_eval->parsed()) {
            for (const char* name : {"main", "metric-ablation", "furniture", "grid-resolution",
                                     "vdr-sweep"}) {
                if (c_eval->get_subcommand(name)->parsed()) return cmd_eval(name, eval_opts, out);
            }
        }
        if (c_plot->parsed()) return cmd_plot(plot_opts, out);
        err << "error: usage: no command given\n";
        return 2;
    } catch (const UsageError& e) {
        err << "error: usage: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace planloc::cli
