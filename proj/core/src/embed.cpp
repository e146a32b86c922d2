#include "planloc/embed.hpp"

#include <algorithm>
#include <cmath>

#include "planloc/error.hpp"
#include "planloc/rng.hpp"

namespace planloc {

std::string to_string(Branch branch) {
    return branch == Branch::Layout ? "layout" : "query";
}

void validate(const EncoderParams& params) {
    if (params.weights.rows() != kEmbedDim || params.weights.cols() != kEncoderInputDim) {
        throw ValidationError("encoder weights must be " + std::to_string(kEmbedDim) + "x" +
                              std::to_string(kEncoderInputDim));
    }
    if (params.bias.size() != kEmbedDim) throw ValidationError("encoder bias must be 128-d");
    if (!params.weights.allFinite() || !params.bias.allFinite()) {
        throw ValidationError("encoder parameters contain non-finite values");
    }
    const bool decoder = params.has_decoder();
    if (decoder != (params.branch == Branch::Layout)) {
        throw ValidationError("decoder must be present exactly on the layout branch");
    }
    if (decoder) {
        if (params.decoder_weights.rows() != kEncoderInputDim ||
            params.decoder_weights.cols() != kEmbedDim ||
            params.decoder_bias.size() != kEncoderInputDim) {
            throw ValidationError("decoder dimensions must be " +
                                  std::to_string(kEncoderInputDim) + "x" +
                                  std::to_string(kEmbedDim));
        }
        if (!params.decoder_weights.allFinite() || !params.decoder_bias.allFinite()) {
            throw ValidationError("decoder parameters contain non-finite values");
        }
    }
}

EncoderParams init_params(Branch branch, std::uint64_t seed) {
    // Branch folds into the stream so the two branches never start identical.
    Rng rng(sub_seed(seed, "init", static_cast<std::uint64_t>(branch)));
    EncoderParams p;
    p.branch = branch;
    const double enc_scale = 1.0 / std::sqrt(static_cast<double>(kEncoderInputDim));
    p.weights.resize(kEmbedDim, kEncoderInputDim);
    for (int r = 0; r < kEmbedDim; ++r) {
        for (int c = 0; c < kEncoderInputDim; ++c) p.weights(r, c) = enc_scale * rng.normal();
    }
    p.bias = Eigen::VectorXd::Zero(kEmbedDim);
    if (branch == Branch::Layout) {
        const double dec_scale = 1.0 / std::sqrt(static_cast<double>(kEmbedDim));
        p.decoder_weights.resize(kEncoderInputDim, kEmbedDim);
        for (int r = 0; r < kEncoderInputDim; ++r) {
            for (int c = 0; c < kEmbedDim; ++c) p.decoder_weights(r, c) = dec_scale * rng.normal();
        }
        p.decoder_bias = Eigen::VectorXd::Zero(kEncoderInputDim);
    }
    return p;
}

Eigen::VectorXd normalize_depth_input(const PanoDepth& img) {
    if (img.width != kEncoderWidth || img.height != kEncoderHeight) {
        throw ValidationError("encoder input must be " + std::to_string(kEncoderWidth) + "x" +
                              std::to_string(kEncoderHeight) + " (got " +
                              std::to_string(img.width) + "x" + std::to_string(img.height) +
                              ")");
    }
    Eigen::VectorXd x(kEncoderInputDim);
    for (int i = 0; i < kEncoderInputDim; ++i) {
        const double d =
            std::clamp(img.depth[static_cast<std::size_t>(i)], kDepthClipMin, kDepthClipMax);
        x[i] = d / kDepthClipMax;
    }
    return x;
}

EncodeTrace encode_traced(const EncoderParams& params, const PanoDepth& img) {
    validate(params);
    EncodeTrace trace;
    trace.input = normalize_depth_input(img);
    trace.pre_norm = params.weights * trace.input + params.bias;
    const double norm = trace.pre_norm.norm();
    if (norm < 1e-12) {
        throw ValidationError("encoder output has zero norm; cannot L2-normalize");
    }
    trace.embedding = trace.pre_norm / norm;
    return trace;
}

Embedding encode(const EncoderParams& params, const PanoDepth& img) {
    return encode_traced(params, img).embedding;
}

Eigen::VectorXd backprop_normalize(const EncodeTrace& trace, const Embedding& grad) {
    const double norm = trace.pre_norm.norm();
    return (grad - trace.embedding.dot(grad) * trace.embedding) / norm;
}

Eigen::VectorXd decode_vector(const EncoderParams& params, const Embedding& e) {
    validate(params);
    if (!params.has_decoder()) {
        throw ValidationError("decode requires layout-branch parameters (no decoder present)");
    }
    return params.decoder_weights * e + params.decoder_bias;
}

PanoDepth decode(const EncoderParams& params, const Embedding& e) {
    const Eigen::VectorXd out = decode_vector(params, e);
    PanoDepth img;
    img.width = kEncoderWidth;
    img.height = kEncoderHeight;
    img.depth.assign(out.data(), out.data() + out.size());
    img.labels.assign(static_cast<std::size_t>(out.size()), kLabelFloor);
    return img;
}

LogRatioLoss loss_log_ratio(const Embedding& g_p, const Embedding& g_i, const Embedding& g_j,
                            double ch_i, double ch_j) {
    if (!(ch_i > 0.0) || !(ch_j > 0.0)) {
        throw ValidationError("log-ratio loss requires positive ground-truth distances");
    }
    const Embedding diff_i = g_i - g_p;
    const Embedding diff_j = g_j - g_p;
    const double d_i = diff_i.norm();
    const double d_j = diff_j.norm();
    if (d_i < 1e-12 || d_j < 1e-12) {
        throw ValidationError("log-ratio loss: coincident embeddings give zero distance");
    }
    const double r = std::log(d_i / d_j) - std::log(ch_i / ch_j);
    LogRatioLoss loss;
    loss.value = r * r;
    loss.grad_i = (2.0 * r / (d_i * d_i)) * diff_i;
    loss.grad_j = (-2.0 * r / (d_j * d_j)) * diff_j;
    loss.grad_anchor = -(loss.grad_i + loss.grad_j);
    return loss;
}

DecodeLoss loss_decode(const Eigen::VectorXd& pred, const Eigen::VectorXd& gt) {
    if (pred.size() != gt.size()) throw ValidationError("decode loss: dimension mismatch");
    if (pred.size() == 0) throw ValidationError("decode loss: empty input");
    DecodeLoss loss;
    loss.grad_pred = Eigen::VectorXd::Zero(pred.size());
    const double n = static_cast<double>(pred.size());
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const double resid = pred[i] - gt[i];
        loss.value += std::abs(resid);
        if (resid > 0.0) {
            loss.grad_pred[i] = 1.0 / n;
        } else if (resid < 0.0) {
            loss.grad_pred[i] = -1.0 / n;
        }
    }
    loss.value /= n;
    return loss;
}

double loss_decode_value(const PanoDepth& pred, const PanoDepth& gt) {
    if (pred.width != gt.width || pred.height != gt.height) {
        throw ValidationError("decode loss: dimension mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.depth.size(); ++i) {
        sum += std::abs(pred.depth[i] - gt.depth[i]);
    }
    return sum / static_cast<double>(pred.depth.size());
}

L2Loss loss_l2(const Embedding& f_p, const Embedding& g_p) {
    L2Loss loss;
    const Embedding diff = f_p - g_p;
    loss.value = diff.norm();
    if (loss.value < 1e-12) {
        loss.grad_query.setZero();
    } else {
        loss.grad_query = diff / loss.value;
    }
    return loss;
}

CrossLoss loss_log_ratio_cross(const Embedding& f_p, const Embedding& g_i,
                               const Embedding& g_j, double ch_i, double ch_j) {
    const LogRatioLoss full = loss_log_ratio(f_p, g_i, g_j, ch_i, ch_j);
    CrossLoss loss;
    loss.value = full.value;
    loss.grad_query = full.grad_anchor;
    return loss;
}

CrossLoss loss_kd_lr(const Embedding& f_p, const Embedding& g_p, const Embedding& g_i,
                     const Embedding& g_j) {
    const double t_i = (g_i - g_p).norm();
    const double t_j = (g_j - g_p).norm();
    if (t_i < 1e-12 || t_j < 1e-12) {
        throw ValidationError("distillation loss: teacher distances are zero");
    }
    const LogRatioLoss full = loss_log_ratio(f_p, g_i, g_j, t_i, t_j);
    CrossLoss loss;
    loss.value = full.value;
    loss.grad_query = full.grad_anchor;
    return loss;
}

}  // namespace planloc
