#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "planloc/icp.hpp"
#include "planloc/localize.hpp"
#include "planloc/metrics.hpp"
#include "planloc/scene.hpp"

namespace planloc {

// Methods an evaluation run can score. Oracle rows rank database entries by a
// ground-truth metric against the query's layout render; the remaining rows
// exercise the trained pipeline with different refinement stages enabled.
enum class EvalMethod {
    OracleEdges,
    OracleDepth,
    OracleRelativeDepth,
    OracleChamfer,
    OraclePose,   // nearest grid pose by construction: pose recall upper bound
    Icp,          // multi-start scan-to-plan alignment baseline
    Retrieval,    // latent nearest neighbour only
    Vdr,          // retrieval + disc resampling
    Lpo,          // retrieval + gradient refinement (no resampling)
    VdrLpo,       // retrieval + disc resampling + gradient refinement
    VdrDecode,    // retrieval + disc resampling + decoded-depth refinement
    Latent,       // headline row: full pipeline (same stages as VdrLpo)
};

std::string method_label(EvalMethod method);
bool method_is_oracle(EvalMethod method);
bool method_needs_params(EvalMethod method);

struct CorpusConfig {
    int scenes = 20;
    int queries_per_scene = 10;
    double grid_resolution = 0.5;  // meters
    double clearance = 0.3;        // meters, for grid poses and query sampling
    FurnitureLevel level = FurnitureLevel::Empty;
    bool ambiguous = false;  // near-duplicate rooms instead of free generation
    std::uint64_t seed = 0;
    int render_width = kEncoderWidth;
    int render_height = kEncoderHeight;
    GenParams gen;
    AmbiguousParams amb;
};

struct SuiteConfig {
    CorpusConfig corpus;
    std::vector<EvalMethod> methods;
    // Required by any non-oracle, non-ICP method. Not owned.
    const EncoderParams* layout_params = nullptr;
    const EncoderParams* query_params = nullptr;
    PipelineConfig pipeline;  // VDR radius/sample count and LPO settings
    ICPConfig icp;
    int jobs = 1;
};

struct EvalRow {
    std::string method;
    double layout_r1 = 0.0;      // top-1 matches the ground-truth Chamfer argmin
    double pose_r1 = 0.0;        // top-1 matches the pose-nearest grid entry
    double correct_room = 0.0;   // final pose lands in the query's room polygon
    double median_cm = 0.0;
    double under_1cm = 0.0;
    double under_5cm = 0.0;
    double under_10cm = 0.0;
    double under_1m = 0.0;
    std::vector<double> errors_m;  // per query, scene-major order
};

struct EvalReport {
    CorpusConfig corpus;
    std::vector<std::uint64_t> scene_seeds;  // resolved per-scene seeds
    std::vector<EvalRow> rows;
};

// Fractions in range, thresholds monotone, median consistent with errors.
void validate(const EvalReport& report);

double median_of(std::vector<double> values);  // by copy: sorts internally

// Runs every requested method over a freshly generated corpus. Per-query work
// is parallel across `jobs`; results are independent of the schedule.
EvalReport evaluate_suite(const SuiteConfig& config);

// VDR density study: for each n runs disc resampling alone and followed by
// gradient refinement, both from identical retrievals. Rows are labeled
// "vdr-n<k>" and "vdr+lpo-n<k>".
EvalReport vdr_sweep(const SuiteConfig& config, const std::vector<int>& sample_counts);

// Furniture study: evaluates `config.methods` at every level, appending
// "-empty" / "-simple" / "-full" to the row labels.
EvalReport furniture_sweep(const SuiteConfig& config);

// Grid density study: evaluates at each resolution, appending "-g<res>".
EvalReport resolution_sweep(const SuiteConfig& config,
                            const std::vector<double>& resolutions);

}  // namespace planloc
