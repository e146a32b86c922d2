#include "planloc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "planloc/error.hpp"
#include "planloc/rng.hpp"

namespace planloc {

std::string to_string(FurnitureLevel level) {
    switch (level) {
        case FurnitureLevel::Empty: return "empty";
        case FurnitureLevel::Simple: return "simple";
        case FurnitureLevel::Full: return "full";
    }
    return "empty";
}

FurnitureLevel furniture_level_from_string(const std::string& s) {
    if (s == "empty") return FurnitureLevel::Empty;
    if (s == "simple") return FurnitureLevel::Simple;
    if (s == "full") return FurnitureLevel::Full;
    throw ParseError("unknown furniture level '" + s + "' (expected empty|simple|full)");
}

int room_containing(const FloorPlan& plan, Vec2 p) {
    for (std::size_t i = 0; i < plan.rooms.size(); ++i) {
        if (point_in_polygon(plan.rooms[i], p)) return static_cast<int>(i);
    }
    return -1;
}

bool in_free_space(const FloorPlan& plan, Vec2 p, double clearance) {
    for (const Polygon& room : plan.rooms) {
        if (point_strictly_inside(room, p, clearance)) return true;
    }
    return false;
}

double wall_clearance(const FloorPlan& plan, Vec2 p) {
    const int room = room_containing(plan, p);
    if (room < 0) return -1.0;
    return polygon_boundary_distance(plan.rooms[static_cast<std::size_t>(room)], p);
}

Rect plan_bounds(const FloorPlan& plan) {
    Rect r{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
           {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
    for (const Polygon& room : plan.rooms) {
        const Rect b = polygon_bbox(room);
        r.lo.x = std::min(r.lo.x, b.lo.x);
        r.lo.y = std::min(r.lo.y, b.lo.y);
        r.hi.x = std::max(r.hi.x, b.hi.x);
        r.hi.y = std::max(r.hi.y, b.hi.y);
    }
    return r;
}

namespace {

bool polygon_is_rectilinear(const Polygon& poly) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        if (a.x != b.x && a.y != b.y) return false;
    }
    return true;
}

// Interior-disjointness for two simple polygons that may share boundary.
bool interiors_disjoint(const Polygon& a, const Polygon& b) {
    if (polygon_is_rectilinear(a) && polygon_is_rectilinear(b)) {
        const double overlap = rectilinear_intersection_area(a, b);
        return overlap <= 1e-12 * std::min(polygon_area(a), polygon_area(b));
    }
    // General fallback: proper edge crossings or strict containment of a
    // vertex / edge midpoint imply overlapping interiors.
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    for (std::size_t i = 0; i < na; ++i) {
        const Vec2 p = a[i];
        const Vec2 q = a[(i + 1) % na];
        for (std::size_t j = 0; j < nb; ++j) {
            const Vec2 r = b[j];
            const Vec2 s = b[(j + 1) % nb];
            const double d1 = (q - p).cross(r - p);
            const double d2 = (q - p).cross(s - p);
            const double d3 = (s - r).cross(p - r);
            const double d4 = (s - r).cross(q - r);
            if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
                ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
                return false;
        }
    }
    for (std::size_t i = 0; i < na; ++i) {
        if (point_strictly_inside(b, a[i])) return false;
        const Vec2 mid = (a[i] + a[(i + 1) % na]) * 0.5;
        if (point_strictly_inside(b, mid)) return false;
    }
    for (std::size_t j = 0; j < nb; ++j) {
        if (point_strictly_inside(a, b[j])) return false;
        const Vec2 mid = (b[j] + b[(j + 1) % nb]) * 0.5;
        if (point_strictly_inside(a, mid)) return false;
    }
    return true;
}

}  // namespace

void validate(const FloorPlan& plan) {
    if (plan.rooms.empty()) throw ValidationError("plan '" + plan.id + "': no rooms");
    if (!(plan.camera_height > 0.0) || !(plan.camera_height < plan.ceiling_height)) {
        throw ValidationError("plan '" + plan.id +
                              "': camera_height must satisfy 0 < camera_height < ceiling_height");
    }
    for (std::size_t i = 0; i < plan.rooms.size(); ++i) {
        const Polygon& room = plan.rooms[i];
        const std::string where = "plan '" + plan.id + "' room " + std::to_string(i);
        if (room.size() < 4) throw ValidationError(where + ": fewer than 4 vertices");
        if (!polygon_is_simple(room)) throw ValidationError(where + ": polygon self-intersects");
        if (signed_area(room) <= 0.0) throw ValidationError(where + ": vertices not counter-clockwise");
    }
    for (std::size_t i = 0; i < plan.rooms.size(); ++i) {
        for (std::size_t j = i + 1; j < plan.rooms.size(); ++j) {
            if (!interiors_disjoint(plan.rooms[i], plan.rooms[j])) {
                throw ValidationError("plan '" + plan.id + "': rooms " + std::to_string(i) +
                                      " and " + std::to_string(j) + " overlap");
            }
        }
    }
}

void validate(const FurnishedScene& scene) {
    validate(scene.plan);
    if (scene.level == FurnitureLevel::Empty && !scene.furniture.empty()) {
        throw ValidationError("scene '" + scene.plan.id + "': level is empty but furniture present");
    }
    for (std::size_t i = 0; i < scene.furniture.size(); ++i) {
        const Box& box = scene.furniture[i];
        const std::string where =
            "scene '" + scene.plan.id + "' furniture box " + std::to_string(i);
        if (!(box.height > 0.0) || box.height >= scene.plan.ceiling_height) {
            throw ValidationError(where + ": height must be in (0, ceiling_height)");
        }
        const Vec2 center{0.5 * (box.footprint.lo.x + box.footprint.hi.x),
                          0.5 * (box.footprint.lo.y + box.footprint.hi.y)};
        const int room = room_containing(scene.plan, center);
        if (room < 0) throw ValidationError(where + ": footprint center outside every room");
        const Polygon& poly = scene.plan.rooms[static_cast<std::size_t>(room)];
        const Rect& f = box.footprint;
        const Vec2 corners[4] = {f.lo, {f.hi.x, f.lo.y}, f.hi, {f.lo.x, f.hi.y}};
        for (const Vec2& c : corners) {
            if (!point_in_polygon(poly, c)) {
                throw ValidationError(where + ": footprint leaves its room");
            }
        }
    }
}

// ---- generation ------------------------------------------------------------

namespace {

struct Leaf {
    Rect rect;
};

bool leaf_splittable(const Leaf& leaf, double min_side) {
    return leaf.rect.width() >= 2.0 * min_side || leaf.rect.height() >= 2.0 * min_side;
}

// Positive-length shared boundary between two axis-aligned rectangles.
bool rects_adjacent(const Rect& a, const Rect& b) {
    auto overlap = [](double lo1, double hi1, double lo2, double hi2) {
        return std::min(hi1, hi2) - std::max(lo1, lo2) > 1e-12;
    };
    if ((a.hi.x == b.lo.x || b.hi.x == a.lo.x) && overlap(a.lo.y, a.hi.y, b.lo.y, b.hi.y))
        return true;
    if ((a.hi.y == b.lo.y || b.hi.y == a.lo.y) && overlap(a.lo.x, a.hi.x, b.lo.x, b.hi.x))
        return true;
    return false;
}

Polygon rect_to_polygon(const Rect& r) {
    return Polygon{{r.lo.x, r.lo.y}, {r.hi.x, r.lo.y}, {r.hi.x, r.hi.y}, {r.lo.x, r.hi.y}};
}

}  // namespace

FloorPlan generate_floorplan(std::uint64_t seed, const GenParams& params) {
    if (params.bounds_width < params.min_room_side || params.bounds_height < params.min_room_side) {
        throw GenerationError("generate_floorplan: min_room_side exceeds the bounding rectangle");
    }
    if (params.room_count_min < 1 || params.room_count_max < params.room_count_min) {
        throw GenerationError("generate_floorplan: invalid room count range");
    }

    Rng rng(seed);
    const int target =
        static_cast<int>(rng.uniform_int(params.room_count_min, params.room_count_max));
    int extra_merges = 0;
    if (target >= 2 && rng.uniform() < params.merge_probability) extra_merges += 1;
    if (target >= 4 && rng.uniform() < 0.5 * params.merge_probability) extra_merges += 1;

    std::vector<Leaf> leaves{Leaf{Rect{{0.0, 0.0}, {params.bounds_width, params.bounds_height}}}};
    while (static_cast<int>(leaves.size()) < target + extra_merges) {
        // Split the largest splittable leaf; ties resolved by index.
        std::size_t pick = leaves.size();
        double best_area = -1.0;
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            if (!leaf_splittable(leaves[i], params.min_room_side)) continue;
            if (leaves[i].rect.area() > best_area) {
                best_area = leaves[i].rect.area();
                pick = i;
            }
        }
        if (pick == leaves.size()) {
            throw GenerationError(
                "generate_floorplan: cannot reach requested room count with min_room_side " +
                std::to_string(params.min_room_side));
        }
        const Rect r = leaves[pick].rect;
        const bool can_x = r.width() >= 2.0 * params.min_room_side;
        const bool can_y = r.height() >= 2.0 * params.min_room_side;
        bool split_x;
        if (can_x && can_y) {
            split_x = r.width() > r.height() ? true
                      : r.height() > r.width() ? false
                                               : rng.uniform() < 0.5;
        } else {
            split_x = can_x;
        }
        if (split_x) {
            const double c =
                rng.uniform(r.lo.x + params.min_room_side, r.hi.x - params.min_room_side);
            leaves[pick].rect = Rect{r.lo, {c, r.hi.y}};
            leaves.push_back(Leaf{Rect{{c, r.lo.y}, r.hi}});
        } else {
            const double c =
                rng.uniform(r.lo.y + params.min_room_side, r.hi.y - params.min_room_side);
            leaves[pick].rect = Rect{r.lo, {r.hi.x, c}};
            leaves.push_back(Leaf{Rect{{r.lo.x, c}, r.hi}});
        }
    }

    std::vector<Polygon> rooms;
    std::vector<Rect> rects;
    rects.reserve(leaves.size());
    for (const Leaf& leaf : leaves) rects.push_back(leaf.rect);

    for (int m = 0; m < extra_merges; ++m) {
        // Collect mergeable pairs, then pick one at random.
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < rects.size(); ++i) {
            for (std::size_t j = i + 1; j < rects.size(); ++j) {
                if (rects_adjacent(rects[i], rects[j])) pairs.emplace_back(i, j);
            }
        }
        bool merged = false;
        while (!pairs.empty() && !merged) {
            const std::size_t k =
                static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pairs.size()) - 1));
            const auto [i, j] = pairs[k];
            try {
                Polygon poly = rectilinear_union({rects[i], rects[j]});
                rooms.push_back(std::move(poly));
                rects.erase(rects.begin() + static_cast<std::ptrdiff_t>(j));
                rects.erase(rects.begin() + static_cast<std::ptrdiff_t>(i));
                merged = true;
            } catch (const GenerationError&) {
                pairs.erase(pairs.begin() + static_cast<std::ptrdiff_t>(k));
            }
        }
    }
    for (const Rect& r : rects) rooms.push_back(rect_to_polygon(r));

    // Deterministic room order: by bbox (y, then x).
    std::sort(rooms.begin(), rooms.end(), [](const Polygon& a, const Polygon& b) {
        const Rect ba = polygon_bbox(a);
        const Rect bb = polygon_bbox(b);
        if (ba.lo.y != bb.lo.y) return ba.lo.y < bb.lo.y;
        if (ba.lo.x != bb.lo.x) return ba.lo.x < bb.lo.x;
        return ba.hi.x < bb.hi.x;
    });

    FloorPlan plan;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "plan-%016llx", static_cast<unsigned long long>(seed));
    plan.id = buf;
    plan.rooms = std::move(rooms);
    plan.ceiling_height = params.ceiling_height;
    plan.camera_height = params.camera_height;
    validate(plan);
    return plan;
}

FloorPlan generate_ambiguous_floorplan(std::uint64_t seed, const AmbiguousParams& params) {
    if (params.rows < 1 || params.cols < 1) {
        throw GenerationError("generate_ambiguous_floorplan: invalid grid");
    }
    Rng rng(seed);
    FloorPlan plan;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "amb-%016llx", static_cast<unsigned long long>(seed));
    plan.id = buf;
    plan.ceiling_height = params.ceiling_height;
    plan.camera_height = params.camera_height;

    // Rooms laid out on a grid cell pitch; each room keeps the shared base
    // dimensions up to a small jitter, so layouts nearly repeat across rooms.
    const double pitch_x = params.room_width + 0.4;
    const double pitch_y = params.room_depth + 0.4;
    for (int r = 0; r < params.rows; ++r) {
        for (int c = 0; c < params.cols; ++c) {
            const double w = params.room_width + rng.uniform(-params.jitter, params.jitter);
            const double d = params.room_depth + rng.uniform(-params.jitter, params.jitter);
            const Vec2 lo{c * pitch_x, r * pitch_y};
            plan.rooms.push_back(rect_to_polygon(Rect{lo, {lo.x + w, lo.y + d}}));
        }
    }
    validate(plan);
    return plan;
}

Scene3D extrude(const FloorPlan& plan) {
    validate(plan);
    Scene3D scene;
    scene.plan = plan;
    std::int32_t edge_id = 0;
    for (std::size_t r = 0; r < plan.rooms.size(); ++r) {
        const Polygon& room = plan.rooms[r];
        const std::size_t n = room.size();
        for (std::size_t i = 0; i < n; ++i) {
            WallQuad wall;
            wall.a = room[i];
            wall.b = room[(i + 1) % n];
            const Vec2 dir = wall.b - wall.a;
            const double len = dir.norm();
            wall.normal = dir.perp() * (1.0 / len);  // CCW interior lies left of a->b
            wall.room_index = static_cast<std::int32_t>(r);
            wall.edge_id = edge_id++;
            scene.walls.push_back(wall);
        }
    }
    return scene;
}

namespace {

bool box_inside_room(const Polygon& room, const Rect& f) {
    const Vec2 corners[4] = {f.lo, {f.hi.x, f.lo.y}, f.hi, {f.lo.x, f.hi.y}};
    for (const Vec2& c : corners) {
        if (!point_strictly_inside(room, c, 1e-9)) return false;
    }
    for (const Vec2& v : room) {
        if (v.x > f.lo.x && v.x < f.hi.x && v.y > f.lo.y && v.y < f.hi.y) return false;
    }
    // Any room edge crossing the open rectangle rules the box out.
    const std::size_t n = room.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = room[i];
        const Vec2 b = room[(i + 1) % n];
        if (a.x == b.x) {
            if (a.x > f.lo.x && a.x < f.hi.x &&
                std::min(a.y, b.y) < f.hi.y && std::max(a.y, b.y) > f.lo.y)
                return false;
        } else {
            if (a.y > f.lo.y && a.y < f.hi.y &&
                std::min(a.x, b.x) < f.hi.x && std::max(a.x, b.x) > f.lo.x)
                return false;
        }
    }
    return true;
}

}  // namespace

FurnishedScene place_furniture(const FloorPlan& plan, FurnitureLevel level, std::uint64_t seed,
                               std::span<const Pose> avoid, double pose_clearance) {
    validate(plan);
    FurnishedScene scene;
    scene.plan = plan;
    scene.level = level;
    scene.seed = seed;
    if (level == FurnitureLevel::Empty) return scene;

    Rng rng(seed);
    const int lo = level == FurnitureLevel::Simple ? 2 : 6;
    const int hi = level == FurnitureLevel::Simple ? 5 : 12;
    const double max_box_height = std::min(1.9, plan.ceiling_height - 0.1);

    for (const Polygon& room : plan.rooms) {
        const int count = static_cast<int>(rng.uniform_int(lo, hi));
        const Rect bbox = polygon_bbox(room);
        for (int k = 0; k < count; ++k) {
            bool placed = false;
            for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                const double sx = rng.uniform(0.3, 1.2);
                const double sy = rng.uniform(0.3, 1.2);
                const double h = rng.uniform(0.4, max_box_height);
                const double cx = rng.uniform(bbox.lo.x, bbox.hi.x);
                const double cy = rng.uniform(bbox.lo.y, bbox.hi.y);
                const Rect f{{cx - 0.5 * sx, cy - 0.5 * sy}, {cx + 0.5 * sx, cy + 0.5 * sy}};
                if (!box_inside_room(room, f)) continue;
                bool blocked = false;
                for (const Pose& p : avoid) {
                    if (p.x > f.lo.x - pose_clearance && p.x < f.hi.x + pose_clearance &&
                        p.y > f.lo.y - pose_clearance && p.y < f.hi.y + pose_clearance) {
                        blocked = true;
                        break;
                    }
                }
                if (blocked) continue;
                scene.furniture.push_back(Box{f, h});
                placed = true;
            }
            if (!placed) {
                throw GenerationError("place_furniture: could not place box " +
                                      std::to_string(k) + " after bounded retries");
            }
        }
    }
    return scene;
}

std::vector<Pose> sample_query_poses(const FloorPlan& plan, int n, std::uint64_t seed,
                                     double clearance) {
    validate(plan);
    if (n < 1) throw GenerationError("sample_query_poses: n must be >= 1");
    Rng rng(seed);
    const Rect bounds = plan_bounds(plan);
    std::vector<Pose> poses;
    poses.reserve(static_cast<std::size_t>(n));
    const long max_attempts = 20000L + 2000L * n;
    for (long attempt = 0; attempt < max_attempts && static_cast<int>(poses.size()) < n;
         ++attempt) {
        const Vec2 p{rng.uniform(bounds.lo.x, bounds.hi.x), rng.uniform(bounds.lo.y, bounds.hi.y)};
        if (in_free_space(plan, p, clearance)) poses.push_back(Pose{p.x, p.y});
    }
    if (static_cast<int>(poses.size()) < n) {
        throw GenerationError("sample_query_poses: free space empty at clearance " +
                              std::to_string(clearance));
    }
    return poses;
}

}  // namespace planloc
