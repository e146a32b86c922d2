#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "planloc/geometry.hpp"

namespace planloc {

/// 2-DoF camera position. Yaw is fixed at 0 throughout: panoramas are
/// rendered axis-aligned and only (x, y) is ever estimated.
struct Pose {
    double x = 0.0;
    double y = 0.0;

    Pose() = default;
    Pose(double x_, double y_) : x(x_), y(y_) {}
    Vec2 xy() const { return {x, y}; }
    bool operator==(const Pose&) const = default;
};

inline double pose_distance(Pose a, Pose b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

struct FloorPlan {
    std::string id;
    std::vector<Polygon> rooms;     // simple, CCW, pairwise disjoint interiors
    double ceiling_height = 2.6;    // meters
    double camera_height = 1.6;     // meters
};

enum class FurnitureLevel { Empty, Simple, Full };

std::string to_string(FurnitureLevel level);
FurnitureLevel furniture_level_from_string(const std::string& s);

/// Axis-aligned clutter box sitting on the floor.
struct Box {
    Rect footprint;
    double height = 0.0;  // top of the box, z in [0, height]
    bool operator==(const Box&) const = default;
};

struct FurnishedScene {
    FloorPlan plan;
    std::vector<Box> furniture;
    FurnitureLevel level = FurnitureLevel::Empty;
    std::uint64_t seed = 0;
};

/// Vertical wall quad spanning z in [0, ceiling_height] over segment a->b.
/// `normal` is the unit inward normal of the owning room.
struct WallQuad {
    Vec2 a;
    Vec2 b;
    Vec2 normal;
    std::int32_t room_index = 0;
    std::int32_t edge_id = 0;  // global edge index across all rooms
};

/// Extruded reference model: walls per room edge plus one floor polygon at
/// z=0 and one ceiling polygon at ceiling_height per room (the room
/// polygons themselves, kept inside `plan`).
struct Scene3D {
    FloorPlan plan;
    std::vector<WallQuad> walls;
};

struct GenParams {
    double bounds_width = 10.0;   // meters
    double bounds_height = 8.0;   // meters
    double min_room_side = 2.0;   // meters
    int room_count_min = 3;
    int room_count_max = 6;
    double merge_probability = 0.25;  // chance of producing an L-shaped room
    double ceiling_height = 2.6;
    double camera_height = 1.6;
};

/// Parameters for plans that stress inter-room ambiguity: several rooms
/// share duplicated dimensions and differ only by a small jitter.
struct AmbiguousParams {
    double room_width = 4.0;
    double room_depth = 3.0;
    int rows = 2;
    int cols = 2;
    double jitter = 0.15;  // max per-room dimension perturbation, meters
    double ceiling_height = 2.6;
    double camera_height = 1.6;
};

// ---- queries -------------------------------------------------------------

/// Index of the room containing p (boundary counts), or -1.
int room_containing(const FloorPlan& plan, Vec2 p);

/// True when p is strictly inside some room with at least `clearance`
/// distance to that room's boundary.
bool in_free_space(const FloorPlan& plan, Vec2 p, double clearance = 0.0);

/// Distance from p to the boundary of its containing room; -1 if p is in
/// no room.
double wall_clearance(const FloorPlan& plan, Vec2 p);

Rect plan_bounds(const FloorPlan& plan);

/// Throws ValidationError when any FloorPlan invariant is broken.
void validate(const FloorPlan& plan);
void validate(const FurnishedScene& scene);

// ---- operations ----------------------------------------------------------

/// Recursive axis-aligned splits of the bounding rectangle; rooms tile the
/// bounds exactly. With merge_probability > 0 some adjacent rooms are
/// merged into rectilinear L-shapes. Pure function of (seed, params).
FloorPlan generate_floorplan(std::uint64_t seed, const GenParams& params = {});

/// Grid of near-duplicate rooms for the layout-ambiguity study.
FloorPlan generate_ambiguous_floorplan(std::uint64_t seed, const AmbiguousParams& params = {});

Scene3D extrude(const FloorPlan& plan);

/// Scatters axis-aligned boxes per room. Box counts: Simple 2..5 per room,
/// Full 6..12. No box footprint (expanded by pose_clearance) may cover a
/// pose in `avoid`. Pure function of inputs.
FurnishedScene place_furniture(const FloorPlan& plan, FurnitureLevel level, std::uint64_t seed,
                               std::span<const Pose> avoid = {}, double pose_clearance = 0.3);

/// Uniform rejection sampling over free space with the given wall clearance.
std::vector<Pose> sample_query_poses(const FloorPlan& plan, int n, std::uint64_t seed,
                                     double clearance = 0.3);

}  // namespace planloc
