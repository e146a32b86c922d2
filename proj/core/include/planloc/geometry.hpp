#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace planloc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    bool operator==(const Vec2&) const = default;

    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
    Vec2 perp() const { return {-y, x}; }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3&) const = default;

    double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Closed polygon, counter-clockwise, last vertex implicitly joined to the first.
using Polygon = std::vector<Vec2>;

struct Rect {
    Vec2 lo;
    Vec2 hi;

    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    double area() const { return width() * height(); }
    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
};

double signed_area(const Polygon& poly);
double polygon_area(const Polygon& poly);
Rect polygon_bbox(const Polygon& poly);

/// Proper or improper intersection of closed segments [a,b] and [c,d].
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// True when no two non-adjacent edges touch and no edge has zero length.
bool polygon_is_simple(const Polygon& poly);

/// Even-odd test; points on the boundary count as inside.
bool point_in_polygon(const Polygon& poly, Vec2 p);

/// True only for points strictly interior by at least `margin`.
bool point_strictly_inside(const Polygon& poly, Vec2 p, double margin = 0.0);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Distance from p to the polygon's boundary (0 on the boundary).
double polygon_boundary_distance(const Polygon& poly, Vec2 p);

/// Area of overlap between two rectilinear polygons (exact up to fp error).
double rectilinear_intersection_area(const Polygon& a, const Polygon& b);

/// Outline of the union of axis-aligned rectangles whose union is connected
/// and hole-free. Returns a CCW rectilinear polygon with collinear vertices
/// merged. Throws GenerationError if the union is not a single simple ring.
Polygon rectilinear_union(const std::vector<Rect>& rects);

}  // namespace planloc
