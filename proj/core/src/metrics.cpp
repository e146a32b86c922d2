#include "planloc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "planloc/error.hpp"
#include "planloc/kdtree.hpp"

namespace planloc {

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::Edges: return "edges";
        case MetricKind::Depth: return "depth";
        case MetricKind::RelativeDepth: return "relative_depth";
        case MetricKind::Chamfer3d: return "chamfer3d";
    }
    return "chamfer3d";
}

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "edges") return MetricKind::Edges;
    if (s == "depth") return MetricKind::Depth;
    if (s == "relative_depth") return MetricKind::RelativeDepth;
    if (s == "chamfer3d") return MetricKind::Chamfer3d;
    throw ParseError("unknown metric '" + s +
                     "' (expected edges|depth|relative_depth|chamfer3d)");
}

namespace {

void check_same_dims(const PanoDepth& a, const PanoDepth& b) {
    if (a.width != b.width || a.height != b.height) {
        throw ValidationError("depth image dimension mismatch: " + std::to_string(a.width) +
                              "x" + std::to_string(a.height) + " vs " +
                              std::to_string(b.width) + "x" + std::to_string(b.height));
    }
}

}  // namespace

double l1_depth(const PanoDepth& a, const PanoDepth& b) {
    check_same_dims(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.depth.size(); ++i) sum += std::abs(a.depth[i] - b.depth[i]);
    return sum / static_cast<double>(a.depth.size());
}

double l1_relative_depth(const PanoDepth& a, const PanoDepth& b) {
    check_same_dims(a, b);
    const double max_a = *std::max_element(a.depth.begin(), a.depth.end());
    const double max_b = *std::max_element(b.depth.begin(), b.depth.end());
    if (!(max_a > 0.0) || !(max_b > 0.0)) {
        throw ValidationError("relative depth requires a positive image maximum");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.depth.size(); ++i) {
        sum += std::abs(a.depth[i] / max_a - b.depth[i] / max_b);
    }
    return sum / static_cast<double>(a.depth.size());
}

std::vector<std::uint8_t> edge_mask(const PanoDepth& img) {
    const int w = img.width;
    const int h = img.height;
    std::vector<std::uint8_t> mask(img.labels.size(), 0);
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const std::uint16_t c = img.label_at(u, v);
            const bool edge = img.label_at((u + 1) % w, v) != c ||
                              img.label_at((u + w - 1) % w, v) != c ||
                              (v + 1 < h && img.label_at(u, v + 1) != c) ||
                              (v > 0 && img.label_at(u, v - 1) != c);
            if (edge) mask[img.index(u, v)] = 1;
        }
    }
    return mask;
}

namespace {

std::vector<std::array<double, 2>> edge_points(const PanoDepth& img) {
    const std::vector<std::uint8_t> mask = edge_mask(img);
    std::vector<std::array<double, 2>> pts;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            if (mask[img.index(u, v)]) {
                pts.push_back({static_cast<double>(u), static_cast<double>(v)});
            }
        }
    }
    return pts;
}

// Mean nearest distance from each query point to the target set, with the
// target replicated at u±width so horizontal wrap costs nothing extra.
double mean_nearest_wrapped(const std::vector<std::array<double, 2>>& queries,
                            const std::vector<std::array<double, 2>>& targets, int width) {
    std::vector<std::array<double, 2>> replicated;
    replicated.reserve(targets.size() * 3);
    for (const auto& p : targets) {
        replicated.push_back({p[0] - width, p[1]});
        replicated.push_back(p);
        replicated.push_back({p[0] + width, p[1]});
    }
    const KdTree2 tree(std::move(replicated));
    double sum = 0.0;
    for (const auto& q : queries) sum += std::sqrt(tree.nearest(q).sq_dist);
    return sum / static_cast<double>(queries.size());
}

}  // namespace

double edge_chamfer_2d(const PanoDepth& a, const PanoDepth& b) {
    check_same_dims(a, b);
    const auto ea = edge_points(a);
    const auto eb = edge_points(b);
    if (ea.empty() || eb.empty()) {
        throw ValidationError("edge Chamfer: an image has no edge pixels (uniform labels)");
    }
    return mean_nearest_wrapped(ea, eb, a.width) + mean_nearest_wrapped(eb, ea, a.width);
}

double chamfer_3d(const PointCloud& a, const PointCloud& b) {
    if (a.points.empty() || b.points.empty()) {
        throw ValidationError("Chamfer distance requires non-empty point clouds");
    }
    auto to_points = [](const PointCloud& c) {
        std::vector<std::array<double, 3>> pts;
        pts.reserve(c.points.size());
        for (const Vec3& p : c.points) pts.push_back({p.x, p.y, p.z});
        return pts;
    };
    const std::vector<std::array<double, 3>> pa = to_points(a);
    const std::vector<std::array<double, 3>> pb = to_points(b);
    const KdTree3 ta(pa);
    const KdTree3 tb(pb);
    double sum_a = 0.0;
    for (const auto& p : pa) sum_a += std::sqrt(tb.nearest(p).sq_dist);
    double sum_b = 0.0;
    for (const auto& p : pb) sum_b += std::sqrt(ta.nearest(p).sq_dist);
    return sum_a / static_cast<double>(pa.size()) + sum_b / static_cast<double>(pb.size());
}

double rmse_points(std::span<const Vec2> a, std::span<const Vec2> b) {
    if (a.empty()) throw ValidationError("rmse_points: empty input");
    if (a.size() != b.size()) throw ValidationError("rmse_points: cardinality mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vec2 d = a[i] - b[i];
        sum += d.dot(d);
    }
    return std::sqrt(sum / static_cast<double>(a.size()));
}

double metric_between(MetricKind kind, const PanoDepth& a, const PanoDepth& b) {
    switch (kind) {
        case MetricKind::Edges: return edge_chamfer_2d(a, b);
        case MetricKind::Depth: return l1_depth(a, b);
        case MetricKind::RelativeDepth: return l1_relative_depth(a, b);
        case MetricKind::Chamfer3d: return chamfer_3d(backproject(a), backproject(b));
    }
    throw ValidationError("unknown metric kind");
}

PointCloud backproject_strided(const PanoDepth& img, int stride) {
    if (stride < 1) throw ValidationError("backproject_strided: stride must be >= 1");
    PointCloud cloud;
    for (int v = 0; v < img.height; v += stride) {
        for (int u = 0; u < img.width; u += stride) {
            const Vec3 d = pixel_ray(u, v, img.width, img.height);
            const double t = img.at(u, v);
            cloud.points.push_back(Vec3{t * d.x, t * d.y, t * d.z});
        }
    }
    return cloud;
}

}  // namespace planloc
