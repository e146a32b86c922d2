#pragma once

#include <cstdint>
#include <vector>

#include "planloc/scene.hpp"

namespace planloc {

// Surface labels stored per pixel. Wall pixels carry kLabelWallBase + edge_id.
inline constexpr std::uint16_t kLabelFloor = 0;
inline constexpr std::uint16_t kLabelCeiling = 1;
inline constexpr std::uint16_t kLabelFurniture = 2;
inline constexpr std::uint16_t kLabelWallBase = 3;

// Equirectangular depth panorama. Pixel (u, v) looks along azimuth
// theta = 2*pi*(u+0.5)/width - pi and elevation phi = pi*(0.5 - (v+0.5)/height);
// depth is the Euclidean distance along that unit ray.
struct PanoDepth {
    int width = 0;
    int height = 0;
    std::vector<double> depth;           // row-major, meters
    std::vector<std::uint16_t> labels;   // row-major, same dimensions

    std::size_t index(int u, int v) const {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(u);
    }
    double at(int u, int v) const { return depth[index(u, v)]; }
    std::uint16_t label_at(int u, int v) const { return labels[index(u, v)]; }
};

struct PointCloud {
    std::vector<Vec3> points;  // camera frame
};

// Per-pixel derivative of rendered depth w.r.t. camera (x, y). Pixels whose
// ray is near-parallel to the hit plane are flagged invalid and must be
// skipped in reductions.
struct DepthJacobian {
    int width = 0;
    int height = 0;
    std::vector<double> d_depth_dx;
    std::vector<double> d_depth_dy;
    std::vector<std::uint8_t> valid;  // 1 = usable entry

    std::size_t index(int u, int v) const {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(u);
    }
};

// Unit ray direction for a pixel center.
Vec3 pixel_ray(int u, int v, int width, int height);

PanoDepth render_layout_depth(const Scene3D& scene, Pose pose, int width, int height);
PanoDepth render_furnished_depth(const FurnishedScene& furnished, Pose pose, int width,
                                 int height);

PointCloud backproject(const PanoDepth& depth);

// Back-projection of the row nearest phi = 0 with z dropped: an emulated
// horizontal laser scan. Point count equals image width.
std::vector<Vec2> horizontal_scan(const PanoDepth& depth);

// Analytic gradient treating each pixel's hit surface as fixed (no
// visibility-edge terms). Floor/ceiling entries are exactly zero.
DepthJacobian depth_pose_jacobian(const Scene3D& scene, Pose pose, int width, int height);

// Central-difference oracle. Pixels whose hit label changes under the
// perturbation are marked invalid (visibility edges).
DepthJacobian fd_depth_jacobian(const Scene3D& scene, Pose pose, int width, int height,
                                double step);

}  // namespace planloc
