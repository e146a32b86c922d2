#include "planloc/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "planloc/error.hpp"

namespace planloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinT = 1e-12;

struct Hit {
    double t = kInf;
    std::uint16_t label = kLabelFloor;
    int wall = -1;  // index into Scene3D::walls when a wall was hit
};

Hit cast_ray(const Scene3D& scene, std::span<const Box> furniture, const Vec3& o,
             const Vec3& d) {
    Hit hit;
    const double ceiling = scene.plan.ceiling_height;

    // Floor and ceiling planes. In a closed room the nearer of these always
    // undercuts any wall intersection whose z would fall outside [0, ceiling],
    // so wall hits below need no z-range test.
    if (d.z < -kMinT) {
        const double t = -o.z / d.z;
        if (t > kMinT && t < hit.t) hit = Hit{t, kLabelFloor, -1};
    } else if (d.z > kMinT) {
        const double t = (ceiling - o.z) / d.z;
        if (t > kMinT && t < hit.t) hit = Hit{t, kLabelCeiling, -1};
    }

    const Vec2 oxy{o.x, o.y};
    const Vec2 dxy{d.x, d.y};
    for (std::size_t w = 0; w < scene.walls.size(); ++w) {
        const WallQuad& wall = scene.walls[w];
        const double denom = wall.normal.dot(dxy);
        if (std::abs(denom) < kMinT) continue;
        const double t = wall.normal.dot(wall.a - oxy) / denom;
        if (t <= kMinT || t >= hit.t) continue;
        const Vec2 p = oxy + dxy * t;
        const Vec2 e = wall.b - wall.a;
        const double s = (p - wall.a).dot(e) / e.dot(e);
        if (s < -1e-12 || s > 1.0 + 1e-12) continue;
        hit = Hit{t, static_cast<std::uint16_t>(kLabelWallBase + wall.edge_id),
                  static_cast<int>(w)};
    }

    for (const Box& box : furniture) {
        // Slab intersection against the box extruded to [0, box.height].
        double t0 = kMinT;
        double t1 = hit.t;
        bool miss = false;
        const double lo[3] = {box.footprint.lo.x, box.footprint.lo.y, 0.0};
        const double hi[3] = {box.footprint.hi.x, box.footprint.hi.y, box.height};
        const double oc[3] = {o.x, o.y, o.z};
        const double dc[3] = {d.x, d.y, d.z};
        for (int axis = 0; axis < 3 && !miss; ++axis) {
            if (std::abs(dc[axis]) < 1e-15) {
                if (oc[axis] < lo[axis] || oc[axis] > hi[axis]) miss = true;
                continue;
            }
            double tn = (lo[axis] - oc[axis]) / dc[axis];
            double tf = (hi[axis] - oc[axis]) / dc[axis];
            if (tn > tf) std::swap(tn, tf);
            t0 = std::max(t0, tn);
            t1 = std::min(t1, tf);
            if (t0 > t1) miss = true;
        }
        if (!miss && t0 < hit.t) hit = Hit{t0, kLabelFurniture, -1};
    }
    return hit;
}

struct RayTable {
    std::vector<double> cos_theta, sin_theta;  // per column
    std::vector<double> cos_phi, sin_phi;      // per row
};

RayTable make_ray_table(int width, int height) {
    RayTable t;
    t.cos_theta.resize(static_cast<std::size_t>(width));
    t.sin_theta.resize(static_cast<std::size_t>(width));
    for (int u = 0; u < width; ++u) {
        const double theta = 2.0 * M_PI * (u + 0.5) / width - M_PI;
        t.cos_theta[static_cast<std::size_t>(u)] = std::cos(theta);
        t.sin_theta[static_cast<std::size_t>(u)] = std::sin(theta);
    }
    t.cos_phi.resize(static_cast<std::size_t>(height));
    t.sin_phi.resize(static_cast<std::size_t>(height));
    for (int v = 0; v < height; ++v) {
        const double phi = M_PI * (0.5 - (v + 0.5) / height);
        t.cos_phi[static_cast<std::size_t>(v)] = std::cos(phi);
        t.sin_phi[static_cast<std::size_t>(v)] = std::sin(phi);
    }
    return t;
}

void check_image_size(int width, int height) {
    if (width < 1 || height < 1) throw RenderError("image dimensions must be positive");
}

PanoDepth render_impl(const Scene3D& scene, std::span<const Box> furniture, Pose pose,
                      int width, int height) {
    check_image_size(width, height);
    if (room_containing(scene.plan, pose.xy()) < 0) {
        throw RenderError("camera pose (" + std::to_string(pose.x) + ", " +
                          std::to_string(pose.y) + ") lies outside every room");
    }
    const RayTable rays = make_ray_table(width, height);
    const Vec3 o{pose.x, pose.y, scene.plan.camera_height};

    PanoDepth img;
    img.width = width;
    img.height = height;
    img.depth.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    img.labels.resize(img.depth.size());
    for (int v = 0; v < height; ++v) {
        const double cp = rays.cos_phi[static_cast<std::size_t>(v)];
        const double sp = rays.sin_phi[static_cast<std::size_t>(v)];
        for (int u = 0; u < width; ++u) {
            const Vec3 d{cp * rays.cos_theta[static_cast<std::size_t>(u)],
                         cp * rays.sin_theta[static_cast<std::size_t>(u)], sp};
            const Hit hit = cast_ray(scene, furniture, o, d);
            if (!std::isfinite(hit.t)) {
                throw RenderError("ray escapes geometry at pixel (" + std::to_string(u) +
                                  ", " + std::to_string(v) + ")");
            }
            const std::size_t idx = img.index(u, v);
            img.depth[idx] = hit.t;
            img.labels[idx] = hit.label;
        }
    }
    return img;
}

}  // namespace

Vec3 pixel_ray(int u, int v, int width, int height) {
    const double theta = 2.0 * M_PI * (u + 0.5) / width - M_PI;
    const double phi = M_PI * (0.5 - (v + 0.5) / height);
    return Vec3{std::cos(phi) * std::cos(theta), std::cos(phi) * std::sin(theta),
                std::sin(phi)};
}

PanoDepth render_layout_depth(const Scene3D& scene, Pose pose, int width, int height) {
    return render_impl(scene, {}, pose, width, height);
}

PanoDepth render_furnished_depth(const FurnishedScene& furnished, Pose pose, int width,
                                 int height) {
    const Scene3D scene = extrude(furnished.plan);
    return render_impl(scene, furnished.furniture, pose, width, height);
}

PointCloud backproject(const PanoDepth& img) {
    PointCloud cloud;
    cloud.points.reserve(img.depth.size());
    const RayTable rays = make_ray_table(img.width, img.height);
    for (int v = 0; v < img.height; ++v) {
        const double cp = rays.cos_phi[static_cast<std::size_t>(v)];
        const double sp = rays.sin_phi[static_cast<std::size_t>(v)];
        for (int u = 0; u < img.width; ++u) {
            const double t = img.at(u, v);
            // Grouped as t * (component) to match strided backprojection bitwise.
            cloud.points.push_back(
                Vec3{t * (cp * rays.cos_theta[static_cast<std::size_t>(u)]),
                     t * (cp * rays.sin_theta[static_cast<std::size_t>(u)]), t * sp});
        }
    }
    return cloud;
}

std::vector<Vec2> horizontal_scan(const PanoDepth& img) {
    const int v = static_cast<int>(std::round(img.height / 2.0 - 0.5));
    std::vector<Vec2> points;
    points.reserve(static_cast<std::size_t>(img.width));
    for (int u = 0; u < img.width; ++u) {
        const Vec3 d = pixel_ray(u, v, img.width, img.height);
        const double t = img.at(u, v);
        points.push_back(Vec2{t * d.x, t * d.y});
    }
    return points;
}

DepthJacobian depth_pose_jacobian(const Scene3D& scene, Pose pose, int width, int height) {
    check_image_size(width, height);
    if (room_containing(scene.plan, pose.xy()) < 0) {
        throw RenderError("camera pose lies outside every room");
    }
    const RayTable rays = make_ray_table(width, height);
    const Vec3 o{pose.x, pose.y, scene.plan.camera_height};

    DepthJacobian jac;
    jac.width = width;
    jac.height = height;
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    jac.d_depth_dx.assign(n, 0.0);
    jac.d_depth_dy.assign(n, 0.0);
    jac.valid.assign(n, 1);
    for (int v = 0; v < height; ++v) {
        const double cp = rays.cos_phi[static_cast<std::size_t>(v)];
        const double sp = rays.sin_phi[static_cast<std::size_t>(v)];
        for (int u = 0; u < width; ++u) {
            const Vec3 d{cp * rays.cos_theta[static_cast<std::size_t>(u)],
                         cp * rays.sin_theta[static_cast<std::size_t>(u)], sp};
            const Hit hit = cast_ray(scene, {}, o, d);
            if (hit.wall < 0) continue;  // floor/ceiling: exactly zero
            const Vec2 normal = scene.walls[static_cast<std::size_t>(hit.wall)].normal;
            const double denom = normal.dot(Vec2{d.x, d.y});
            const std::size_t idx = jac.index(u, v);
            if (std::abs(denom) < 1e-9) {
                jac.valid[idx] = 0;
                continue;
            }
            jac.d_depth_dx[idx] = -normal.x / denom;
            jac.d_depth_dy[idx] = -normal.y / denom;
        }
    }
    return jac;
}

DepthJacobian fd_depth_jacobian(const Scene3D& scene, Pose pose, int width, int height,
                                double step) {
    if (!(step > 0.0)) throw RenderError("finite-difference step must be positive");
    const PanoDepth center = render_layout_depth(scene, pose, width, height);
    const PanoDepth px = render_layout_depth(scene, Pose{pose.x + step, pose.y}, width, height);
    const PanoDepth mx = render_layout_depth(scene, Pose{pose.x - step, pose.y}, width, height);
    const PanoDepth py = render_layout_depth(scene, Pose{pose.x, pose.y + step}, width, height);
    const PanoDepth my = render_layout_depth(scene, Pose{pose.x, pose.y - step}, width, height);

    DepthJacobian jac;
    jac.width = width;
    jac.height = height;
    const std::size_t n = center.depth.size();
    jac.d_depth_dx.assign(n, 0.0);
    jac.d_depth_dy.assign(n, 0.0);
    jac.valid.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t label = center.labels[i];
        if (px.labels[i] != label || mx.labels[i] != label || py.labels[i] != label ||
            my.labels[i] != label) {
            jac.valid[i] = 0;  // visibility edge under perturbation
            continue;
        }
        jac.d_depth_dx[i] = (px.depth[i] - mx.depth[i]) / (2.0 * step);
        jac.d_depth_dy[i] = (py.depth[i] - my.depth[i]) / (2.0 * step);
    }
    return jac;
}

}  // namespace planloc
