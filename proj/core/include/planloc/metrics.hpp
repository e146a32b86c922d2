#pragma once

#include <span>
#include <string>
#include <vector>

#include "planloc/render.hpp"

namespace planloc {

enum class MetricKind { Edges, Depth, RelativeDepth, Chamfer3d };

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& s);

// Mean absolute pixelwise depth difference, meters.
double l1_depth(const PanoDepth& a, const PanoDepth& b);

// Each image divided by its own max before the L1 mean; scale invariant.
double l1_relative_depth(const PanoDepth& a, const PanoDepth& b);

// Pixels whose 4-neighbourhood (horizontal wrap, vertical clamped) contains a
// different label.
std::vector<std::uint8_t> edge_mask(const PanoDepth& img);

// Symmetric Chamfer between the two edge-pixel sets, Euclidean on (u, v) with
// horizontal wrap-around. Units: pixels.
double edge_chamfer_2d(const PanoDepth& a, const PanoDepth& b);

// Ch(A,B) = mean_a min_b |a-b| + mean_b min_a |a-b| (non-squared), meters.
double chamfer_3d(const PointCloud& a, const PointCloud& b);

// Root mean squared residual between index-matched points, meters.
double rmse_points(std::span<const Vec2> a, std::span<const Vec2> b);

// Dispatch on kind; chamfer3d back-projects both images internally.
double metric_between(MetricKind kind, const PanoDepth& a, const PanoDepth& b);

// Back-projection restricted to pixels at the given stride along both axes,
// used to keep training-label Chamfer clouds at or under 2048 points.
PointCloud backproject_strided(const PanoDepth& depth, int stride);

}  // namespace planloc
