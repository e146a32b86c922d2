#include "doctest.h"

#include <algorithm>
#include <string>
#include <vector>

#include "planloc/embed.hpp"
#include "planloc/error.hpp"
#include "planloc/eval.hpp"

using namespace planloc;

namespace {

CorpusConfig tiny_corpus() {
    CorpusConfig c;
    c.scenes = 2;
    c.queries_per_scene = 2;
    c.grid_resolution = 1.0;
    c.seed = 7;
    return c;
}

PipelineConfig tiny_pipeline() {
    PipelineConfig p;
    p.vdr_samples = 10;
    p.lpo.max_iterations = 25;
    p.lpo.convergence_window = 10;
    return p;
}

const EvalRow& row_named(const EvalReport& report, const std::string& label) {
    for (const EvalRow& row : report.rows) {
        if (row.method == label) return row;
    }
    REQUIRE_MESSAGE(false, "missing row: " << label);
    return report.rows.front();  // unreachable
}

}  // namespace

TEST_CASE("method labels and capability flags") {
    CHECK(method_label(EvalMethod::OracleEdges) == "oracle-edges");
    CHECK(method_label(EvalMethod::OracleDepth) == "oracle-depth");
    CHECK(method_label(EvalMethod::OracleRelativeDepth) == "oracle-relative_depth");
    CHECK(method_label(EvalMethod::OracleChamfer) == "oracle-chamfer3d");
    CHECK(method_label(EvalMethod::OraclePose) == "oracle-pose");
    CHECK(method_label(EvalMethod::Icp) == "icp");
    CHECK(method_label(EvalMethod::Retrieval) == "retrieval");
    CHECK(method_label(EvalMethod::Vdr) == "vdr");
    CHECK(method_label(EvalMethod::Lpo) == "lpo");
    CHECK(method_label(EvalMethod::VdrLpo) == "vdr+lpo");
    CHECK(method_label(EvalMethod::VdrDecode) == "vdr+decode");
    CHECK(method_label(EvalMethod::Latent) == "latent");

    CHECK(method_is_oracle(EvalMethod::OraclePose));
    CHECK_FALSE(method_is_oracle(EvalMethod::Icp));
    CHECK_FALSE(method_needs_params(EvalMethod::Icp));
    CHECK(method_needs_params(EvalMethod::Retrieval));
    CHECK(method_needs_params(EvalMethod::Latent));
}

TEST_CASE("median of a sorted copy") {
    CHECK(median_of({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median_of({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median_of({5.0}) == 5.0);
    CHECK_THROWS_AS((void)median_of({}), ValidationError);
}

TEST_CASE("oracle rows hit their recall bounds on a tiny corpus") {
    SuiteConfig config;
    config.corpus = tiny_corpus();
    config.methods = {EvalMethod::OraclePose, EvalMethod::OracleChamfer, EvalMethod::Icp};

    const EvalReport report = evaluate_suite(config);
    validate(report);
    CHECK(report.scene_seeds.size() == 2);
    REQUIRE(report.rows.size() == 3);
    for (const EvalRow& row : report.rows) {
        CHECK(row.errors_m.size() == 4);
    }

    // Ranking by ground-truth layout distance IS the layout-recall reference;
    // ranking by pose distance IS the pose-recall reference.
    CHECK(row_named(report, "oracle-chamfer3d").layout_r1 == 1.0);
    CHECK(row_named(report, "oracle-pose").pose_r1 == 1.0);

    // Identical configuration, scheduled differently, reruns bitwise.
    SuiteConfig par = config;
    par.jobs = 3;
    const EvalReport again = evaluate_suite(par);
    REQUIRE(again.rows.size() == report.rows.size());
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
        CHECK(again.rows[r].method == report.rows[r].method);
        REQUIRE(again.rows[r].errors_m.size() == report.rows[r].errors_m.size());
        for (std::size_t i = 0; i < report.rows[r].errors_m.size(); ++i) {
            CHECK(again.rows[r].errors_m[i] == report.rows[r].errors_m[i]);
        }
        CHECK(again.rows[r].median_cm == report.rows[r].median_cm);
    }
}

TEST_CASE("suite validation rejects unusable configurations") {
    SuiteConfig config;
    config.corpus = tiny_corpus();

    config.methods = {};
    CHECK_THROWS_AS((void)evaluate_suite(config), ValidationError);

    config.methods = {EvalMethod::OraclePose};
    config.corpus.scenes = 0;
    CHECK_THROWS_AS((void)evaluate_suite(config), ValidationError);

    config.corpus = tiny_corpus();
    config.corpus.queries_per_scene = 0;
    CHECK_THROWS_AS((void)evaluate_suite(config), ValidationError);

    config.corpus = tiny_corpus();
    config.methods = {EvalMethod::Latent};  // needs encoder params
    CHECK_THROWS_AS((void)evaluate_suite(config), ValidationError);
}

TEST_CASE("the headline row reuses the full-pipeline computation") {
    const EncoderParams layout = init_params(Branch::Layout, 21);
    const EncoderParams query = init_params(Branch::Query, 22);

    SuiteConfig config;
    config.corpus = tiny_corpus();
    config.methods = {EvalMethod::Latent, EvalMethod::VdrLpo, EvalMethod::Retrieval};
    config.layout_params = &layout;
    config.query_params = &query;
    config.pipeline = tiny_pipeline();

    const EvalReport report = evaluate_suite(config);
    validate(report);
    const EvalRow& latent = row_named(report, "latent");
    const EvalRow& vdrlpo = row_named(report, "vdr+lpo");
    REQUIRE(latent.errors_m.size() == vdrlpo.errors_m.size());
    for (std::size_t i = 0; i < latent.errors_m.size(); ++i) {
        CHECK(latent.errors_m[i] == vdrlpo.errors_m[i]);
    }
    CHECK(latent.median_cm == vdrlpo.median_cm);
}

TEST_CASE("furniture sweep suffixes each level") {
    SuiteConfig config;
    config.corpus = tiny_corpus();
    config.methods = {EvalMethod::Icp};

    const EvalReport report = furniture_sweep(config);
    validate(report);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].method == "icp-empty");
    CHECK(report.rows[1].method == "icp-simple");
    CHECK(report.rows[2].method == "icp-full");
}

TEST_CASE("resolution sweep suffixes each grid") {
    SuiteConfig config;
    config.corpus = tiny_corpus();
    config.methods = {EvalMethod::OracleChamfer};

    const EvalReport report = resolution_sweep(config, {0.5, 1.0});
    validate(report);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].method == "oracle-chamfer3d-g0.5");
    CHECK(report.rows[1].method == "oracle-chamfer3d-g1");
}

TEST_CASE("density sweep interleaves plain and refined rows") {
    const EncoderParams layout = init_params(Branch::Layout, 21);
    const EncoderParams query = init_params(Branch::Query, 22);

    SuiteConfig config;
    config.corpus = tiny_corpus();
    config.methods = {EvalMethod::Latent};
    config.layout_params = &layout;
    config.query_params = &query;
    config.pipeline = tiny_pipeline();

    const EvalReport report = vdr_sweep(config, {1, 5});
    validate(report);
    REQUIRE(report.rows.size() == 4);
    CHECK(report.rows[0].method == "vdr-n1");
    CHECK(report.rows[1].method == "vdr+lpo-n1");
    CHECK(report.rows[2].method == "vdr-n5");
    CHECK(report.rows[3].method == "vdr+lpo-n5");
}
