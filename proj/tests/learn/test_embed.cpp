#include "doctest.h"

#include <cmath>

#include "planloc/embed.hpp"
#include "planloc/error.hpp"
#include "planloc/render.hpp"
#include "planloc/rng.hpp"
#include "../support.hpp"

using namespace planloc;
using planloc::testing::box_room;

namespace {

Embedding random_embedding(Rng& rng, bool normalize = true) {
    Embedding e;
    for (int i = 0; i < kEmbedDim; ++i) e[i] = rng.normal();
    if (normalize) e /= e.norm();
    return e;
}

PanoDepth test_render(Pose pose) {
    static const Scene3D scene = extrude(box_room(5.0, 4.0));
    return render_layout_depth(scene, pose, kEncoderWidth, kEncoderHeight);
}

// Central-difference gradient of `f` w.r.t. one coordinate of `e`.
template <typename F>
double fd_grad(F&& f, Embedding& e, int dim, double h = 1e-6) {
    const double saved = e[dim];
    e[dim] = saved + h;
    const double up = f();
    e[dim] = saved - h;
    const double down = f();
    e[dim] = saved;
    return (up - down) / (2.0 * h);
}

bool grad_close(double analytic, double fd) {
    return std::abs(analytic - fd) <= 1e-5 * std::max(1.0, std::abs(fd));
}

}  // namespace

TEST_CASE("normalized input clips and scales") {
    PanoDepth img = test_render(Pose{1.0, 1.0});
    img.depth[0] = 0.01;   // below the clip floor
    img.depth[1] = 50.0;   // above the ceiling
    img.depth[2] = 2.0;
    const Eigen::VectorXd x = normalize_depth_input(img);
    REQUIRE(x.size() == kEncoderInputDim);
    CHECK(x[0] == doctest::Approx(kDepthClipMin / kDepthClipMax));
    CHECK(x[1] == doctest::Approx(1.0));
    CHECK(x[2] == doctest::Approx(0.1));
    for (int i = 0; i < x.size(); ++i) {
        CHECK(x[i] >= kDepthClipMin / kDepthClipMax);
        CHECK(x[i] <= 1.0);
    }

    PanoDepth wrong;
    wrong.width = 8;
    wrong.height = 4;
    wrong.depth.assign(32, 1.0);
    wrong.labels.assign(32, 0);
    CHECK_THROWS_AS((void)normalize_depth_input(wrong), ValidationError);
}

TEST_CASE("encode produces unit embeddings matching the linear map") {
    const EncoderParams params = init_params(Branch::Layout, 3);
    const PanoDepth img = test_render(Pose{2.0, 1.5});
    const Embedding e = encode(params, img);
    CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::VectorXd x = normalize_depth_input(img);
    const Eigen::VectorXd pre = params.weights * x + params.bias;
    const Embedding expected = pre / pre.norm();
    CHECK((e - expected).norm() < 1e-14);

    const EncodeTrace trace = encode_traced(params, img);
    CHECK(trace.embedding == e);
    CHECK((trace.pre_norm - pre).norm() < 1e-14);
}

TEST_CASE("zero pre-activation is rejected") {
    EncoderParams params = init_params(Branch::Query, 1);
    params.weights.setZero();
    params.bias.setZero();
    CHECK_THROWS_AS((void)encode(params, test_render(Pose{1.0, 1.0})), ValidationError);
}

TEST_CASE("init is deterministic and branch-shaped") {
    const EncoderParams a = init_params(Branch::Layout, 7);
    const EncoderParams b = init_params(Branch::Layout, 7);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(a.has_decoder());
    CHECK(a.decoder_weights == b.decoder_weights);
    CHECK_NOTHROW(validate(a));

    const EncoderParams q = init_params(Branch::Query, 7);
    CHECK_FALSE(q.has_decoder());
    CHECK_NOTHROW(validate(q));
    CHECK(q.weights != a.weights);  // branch feeds the seed

    EncoderParams broken = init_params(Branch::Layout, 7);
    broken.decoder_weights.resize(0, 0);
    CHECK_THROWS_AS(validate(broken), ValidationError);
}

TEST_CASE("decode returns meters at encoder shape") {
    const EncoderParams params = init_params(Branch::Layout, 5);
    Rng rng(6);
    const Embedding e = random_embedding(rng);
    const PanoDepth img = decode(params, e);
    CHECK(img.width == kEncoderWidth);
    CHECK(img.height == kEncoderHeight);
    CHECK(img.depth.size() == static_cast<std::size_t>(kEncoderInputDim));
    const Eigen::VectorXd v = decode_vector(params, e);
    for (int i = 0; i < v.size(); ++i) CHECK(img.depth[static_cast<std::size_t>(i)] == v[i]);

    const EncoderParams query = init_params(Branch::Query, 5);
    CHECK_THROWS_AS((void)decode(query, e), ValidationError);
}

TEST_CASE("normalization backprop matches finite differences") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        Embedding x = random_embedding(rng, false) * rng.uniform(0.5, 3.0);
        const Embedding c = random_embedding(rng, false);
        auto value = [&]() { return c.dot(x / x.norm()); };

        EncodeTrace trace;
        trace.pre_norm = x;
        trace.embedding = x / x.norm();
        const Eigen::VectorXd g = backprop_normalize(trace, c);
        for (int dim : {0, 17, 63, 127}) {
            CHECK(grad_close(g[dim], fd_grad(value, x, dim)));
        }
    }
}

TEST_CASE("log-ratio loss value on a hand case") {
    Embedding p = Embedding::Zero();
    Embedding i = Embedding::Zero();
    Embedding j = Embedding::Zero();
    p[0] = 1.0;
    i[1] = 1.0;
    j[2] = 1.0;
    // Embedding distances are equal, so the loss is (0 - log 2)^2.
    const LogRatioLoss loss = loss_log_ratio(p, i, j, 2.0, 1.0);
    CHECK(loss.value == doctest::Approx(std::log(2.0) * std::log(2.0)));
    // Matching ratios give zero loss.
    CHECK(loss_log_ratio(p, i, j, 3.0, 3.0).value == doctest::Approx(0.0));
}

TEST_CASE("log-ratio loss gradients match finite differences") {
    Rng rng(32);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Embedding p = random_embedding(rng);
        Embedding i = random_embedding(rng);
        Embedding j = random_embedding(rng);
        const double ch_i = rng.uniform(0.05, 2.0);
        const double ch_j = rng.uniform(0.05, 2.0);
        const LogRatioLoss loss = loss_log_ratio(p, i, j, ch_i, ch_j);
        auto value = [&]() { return loss_log_ratio(p, i, j, ch_i, ch_j).value; };
        for (int dim : {3, 40, 90}) {
            CHECK(grad_close(loss.grad_anchor[dim], fd_grad(value, p, dim)));
            CHECK(grad_close(loss.grad_i[dim], fd_grad(value, i, dim)));
            CHECK(grad_close(loss.grad_j[dim], fd_grad(value, j, dim)));
            ++checked;
        }
    }
    CHECK(checked >= 100);
}

TEST_CASE("log-ratio loss rejects degenerate inputs") {
    Rng rng(33);
    const Embedding p = random_embedding(rng);
    const Embedding i = random_embedding(rng);
    CHECK_THROWS_AS((void)loss_log_ratio(p, i, i, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS((void)loss_log_ratio(p, p, i, 1.0, 1.0), ValidationError);
}

TEST_CASE("decode loss gradients match finite differences") {
    Rng rng(34);
    Eigen::VectorXd pred(kEncoderInputDim);
    Eigen::VectorXd gt(kEncoderInputDim);
    for (int t = 0; t < 5; ++t) {
        for (int k = 0; k < kEncoderInputDim; ++k) {
            pred[k] = rng.uniform(0.0, 10.0);
            gt[k] = rng.uniform(0.0, 10.0);
        }
        const DecodeLoss loss = loss_decode(pred, gt);
        CHECK(loss.value == doctest::Approx((pred - gt).cwiseAbs().mean()));
        for (int dim : {0, 999, 2047}) {
            const double h = 1e-6;
            const double saved = pred[dim];
            pred[dim] = saved + h;
            const double up = loss_decode(pred, gt).value;
            pred[dim] = saved - h;
            const double down = loss_decode(pred, gt).value;
            pred[dim] = saved;
            CHECK(grad_close(loss.grad_pred[dim], (up - down) / (2.0 * h)));
        }
    }
}

TEST_CASE("query L2 loss and gradient") {
    Rng rng(35);
    for (int t = 0; t < 25; ++t) {
        Embedding f = random_embedding(rng);
        const Embedding g = random_embedding(rng);
        const L2Loss loss = loss_l2(f, g);
        CHECK(loss.value == doctest::Approx((f - g).norm()));
        auto value = [&]() { return loss_l2(f, g).value; };
        for (int dim : {5, 77}) {
            CHECK(grad_close(loss.grad_query[dim], fd_grad(value, f, dim)));
        }
    }
}

TEST_CASE("cross log-ratio and distillation gradients match finite differences") {
    Rng rng(36);
    int checked = 0;
    for (int t = 0; t < 30; ++t) {
        Embedding f = random_embedding(rng);
        const Embedding p = random_embedding(rng);
        const Embedding i = random_embedding(rng);
        const Embedding j = random_embedding(rng);
        const double ch_i = rng.uniform(0.05, 2.0);
        const double ch_j = rng.uniform(0.05, 2.0);

        const CrossLoss cross = loss_log_ratio_cross(f, i, j, ch_i, ch_j);
        auto cross_value = [&]() { return loss_log_ratio_cross(f, i, j, ch_i, ch_j).value; };
        const CrossLoss kd = loss_kd_lr(f, p, i, j);
        auto kd_value = [&]() { return loss_kd_lr(f, p, i, j).value; };
        for (int dim : {11, 64, 120}) {
            CHECK(grad_close(cross.grad_query[dim], fd_grad(cross_value, f, dim)));
            CHECK(grad_close(kd.grad_query[dim], fd_grad(kd_value, f, dim)));
            checked += 2;
        }
    }
    CHECK(checked >= 100);
}

TEST_CASE("distillation loss is zero when ratios agree") {
    Embedding f = Embedding::Zero();
    Embedding p = Embedding::Zero();
    Embedding i = Embedding::Zero();
    Embedding j = Embedding::Zero();
    f[3] = 1.0;
    p[0] = 1.0;
    i[1] = 1.0;
    j[2] = 1.0;
    CHECK(loss_kd_lr(f, p, i, j).value == doctest::Approx(0.0));
}

TEST_CASE("embedding distance is the plain euclidean norm") {
    Embedding a = Embedding::Zero();
    Embedding b = Embedding::Zero();
    a[0] = 1.0;
    b[1] = 1.0;
    CHECK(embedding_distance(a, b) == doctest::Approx(std::sqrt(2.0)));
    CHECK(embedding_distance(a, a) == doctest::Approx(0.0));
}
