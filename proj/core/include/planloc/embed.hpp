#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "planloc/render.hpp"

namespace planloc {

inline constexpr int kEmbedDim = 128;
inline constexpr int kEncoderWidth = 64;
inline constexpr int kEncoderHeight = 32;
inline constexpr int kEncoderInputDim = kEncoderWidth * kEncoderHeight;

// Depth values are clipped to this range and divided by the max before
// encoding; the decoder predicts the clipped depth back in meters.
inline constexpr double kDepthClipMin = 0.1;
inline constexpr double kDepthClipMax = 20.0;

using Embedding = Eigen::Matrix<double, kEmbedDim, 1>;

inline double embedding_distance(const Embedding& a, const Embedding& b) {
    return (a - b).norm();
}

enum class Branch : std::uint32_t { Layout = 0, Query = 1 };

std::string to_string(Branch branch);

// One linear map per branch; the layout branch additionally carries the
// decoder back to depth-image space.
struct EncoderParams {
    Branch branch = Branch::Layout;
    Eigen::MatrixXd weights;          // kEmbedDim x kEncoderInputDim
    Eigen::VectorXd bias;             // kEmbedDim
    Eigen::MatrixXd decoder_weights;  // kEncoderInputDim x kEmbedDim (layout only)
    Eigen::VectorXd decoder_bias;     // kEncoderInputDim (layout only)

    bool has_decoder() const { return decoder_weights.size() > 0; }
};

void validate(const EncoderParams& params);

// Deterministic small-weight initialization.
EncoderParams init_params(Branch branch, std::uint64_t seed);

// Clip to [kDepthClipMin, kDepthClipMax], divide by kDepthClipMax; requires a
// kEncoderWidth x kEncoderHeight image.
Eigen::VectorXd normalize_depth_input(const PanoDepth& img);

Embedding encode(const EncoderParams& params, const PanoDepth& img);

struct EncodeTrace {
    Eigen::VectorXd input;     // normalized depth, kEncoderInputDim
    Eigen::VectorXd pre_norm;  // W*input + bias
    Embedding embedding;       // pre_norm / |pre_norm|
};

EncodeTrace encode_traced(const EncoderParams& params, const PanoDepth& img);

// Pull a gradient w.r.t. the normalized embedding back through the
// normalization: g_pre = (g - (g . e) e) / |pre_norm|.
Eigen::VectorXd backprop_normalize(const EncodeTrace& trace, const Embedding& grad);

// Linear decode to a depth image in meters (values unconstrained in sign).
PanoDepth decode(const EncoderParams& params, const Embedding& e);
Eigen::VectorXd decode_vector(const EncoderParams& params, const Embedding& e);

// ---- losses (value + analytic gradients) -----------------------------------

struct LogRatioLoss {
    double value = 0.0;
    Embedding grad_anchor;  // d value / d g_p (or f_p for the cross variant)
    Embedding grad_i;
    Embedding grad_j;
};

// (log(D(g_i,g_p)/D(g_j,g_p)) - log(ch_i/ch_j))^2 with D the Euclidean
// embedding distance and ch_* ground-truth Chamfer values.
LogRatioLoss loss_log_ratio(const Embedding& g_p, const Embedding& g_i, const Embedding& g_j,
                            double ch_i, double ch_j);

struct DecodeLoss {
    double value = 0.0;
    Eigen::VectorXd grad_pred;  // kEncoderInputDim
};

// Mean absolute error over pixels; subgradient 0 at zero residuals.
DecodeLoss loss_decode(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt);
double loss_decode_value(const PanoDepth& pred, const PanoDepth& gt);

struct L2Loss {
    double value = 0.0;
    Embedding grad_query;  // gradient w.r.t. f_p only; g_p is a frozen teacher
};

L2Loss loss_l2(const Embedding& f_p, const Embedding& g_p);

struct CrossLoss {
    double value = 0.0;
    Embedding grad_query;  // gradient w.r.t. f_p only
};

// Log-ratio loss with f_p as the anchor; layout embeddings frozen.
CrossLoss loss_log_ratio_cross(const Embedding& f_p, const Embedding& g_i,
                               const Embedding& g_j, double ch_i, double ch_j);

// As above but the target ratio is the teacher's own embedding-distance ratio
// D(g_i,g_p)/D(g_j,g_p) instead of a Chamfer ratio.
CrossLoss loss_kd_lr(const Embedding& f_p, const Embedding& g_p, const Embedding& g_i,
                     const Embedding& g_j);

}  // namespace planloc
