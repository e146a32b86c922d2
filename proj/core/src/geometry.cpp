#include "planloc/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>

#include "planloc/error.hpp"

namespace planloc {

double signed_area(const Polygon& poly) {
    double acc = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        acc += a.cross(b);
    }
    return 0.5 * acc;
}

double polygon_area(const Polygon& poly) { return std::abs(signed_area(poly)); }

Rect polygon_bbox(const Polygon& poly) {
    Rect r{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
           {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
    for (const Vec2& p : poly) {
        r.lo.x = std::min(r.lo.x, p.x);
        r.lo.y = std::min(r.lo.y, p.y);
        r.hi.x = std::max(r.hi.x, p.x);
        r.hi.y = std::max(r.hi.y, p.y);
    }
    return r;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
    const double v = (b - a).cross(c - a);
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return orientation(a, b, p) == 0 && p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) &&
           p.y >= std::min(a.y, b.y) && p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

bool polygon_is_simple(const Polygon& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if ((poly[(i + 1) % n] - poly[i]).norm() == 0.0) return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec2 c = poly[j];
            const Vec2 d = poly[(j + 1) % n];
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) {
                // Adjacent edges may only share their common endpoint.
                const Vec2 shared = (j == i + 1) ? b : a;
                const Vec2 tip_i = (j == i + 1) ? a : b;
                const Vec2 tip_j = (j == i + 1) ? d : c;
                if (on_segment(c, d, tip_i) && !(tip_i == shared)) return false;
                if (on_segment(a, b, tip_j) && !(tip_j == shared)) return false;
                if (orientation(a, b, c) == 0 && orientation(a, b, d) == 0) {
                    // Collinear neighbours: reject if they overlap beyond the joint.
                    if (on_segment(a, b, tip_j) || on_segment(c, d, tip_i)) return false;
                }
            } else if (segments_intersect(a, b, c, d)) {
                return false;
            }
        }
    }
    return true;
}

bool point_in_polygon(const Polygon& poly, Vec2 p) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (on_segment(poly[i], poly[(i + 1) % n], p)) return true;
    }
    bool inside = false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool point_strictly_inside(const Polygon& poly, Vec2 p, double margin) {
    if (!point_in_polygon(poly, p)) return false;
    return polygon_boundary_distance(poly, p) > margin;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

double polygon_boundary_distance(const Polygon& poly, Vec2 p) {
    double best = std::numeric_limits<double>::max();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    }
    return best;
}

namespace {

// Decomposes a rectilinear polygon into horizontal slabs of covered x-intervals.
std::vector<Rect> rectilinear_decompose(const Polygon& poly) {
    std::vector<double> ys;
    ys.reserve(poly.size());
    for (const Vec2& v : poly) ys.push_back(v.y);
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    std::vector<Rect> out;
    const std::size_t n = poly.size();
    for (std::size_t s = 0; s + 1 < ys.size(); ++s) {
        const double y0 = ys[s];
        const double y1 = ys[s + 1];
        const double ym = 0.5 * (y0 + y1);
        std::vector<double> xs;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = poly[i];
            const Vec2 b = poly[(i + 1) % n];
            if (a.x == b.x && ((a.y < ym && b.y > ym) || (b.y < ym && a.y > ym))) {
                xs.push_back(a.x);
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            out.push_back(Rect{{xs[k], y0}, {xs[k + 1], y1}});
        }
    }
    return out;
}

double rect_overlap_area(const Rect& a, const Rect& b) {
    const double w = std::min(a.hi.x, b.hi.x) - std::max(a.lo.x, b.lo.x);
    const double h = std::min(a.hi.y, b.hi.y) - std::max(a.lo.y, b.lo.y);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

}  // namespace

double rectilinear_intersection_area(const Polygon& a, const Polygon& b) {
    const std::vector<Rect> ra = rectilinear_decompose(a);
    const std::vector<Rect> rb = rectilinear_decompose(b);
    double acc = 0.0;
    for (const Rect& x : ra) {
        for (const Rect& y : rb) acc += rect_overlap_area(x, y);
    }
    return acc;
}

Polygon rectilinear_union(const std::vector<Rect>& rects) {
    if (rects.empty()) throw GenerationError("rectilinear_union: no rectangles");

    std::vector<double> xs, ys;
    for (const Rect& r : rects) {
        xs.push_back(r.lo.x);
        xs.push_back(r.hi.x);
        ys.push_back(r.lo.y);
        ys.push_back(r.hi.y);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    const std::size_t nx = xs.size() - 1;
    const std::size_t ny = ys.size() - 1;
    auto covered = [&](std::size_t i, std::size_t j) {
        const Vec2 mid{0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])};
        for (const Rect& r : rects) {
            if (mid.x > r.lo.x && mid.x < r.hi.x && mid.y > r.lo.y && mid.y < r.hi.y) return true;
        }
        return false;
    };
    std::vector<std::uint8_t> cov(nx * ny, 0);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) cov[j * nx + i] = covered(i, j) ? 1 : 0;
    }
    auto is_cov = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
        if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(nx) ||
            j >= static_cast<std::ptrdiff_t>(ny))
            return false;
        return cov[static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i)] != 0;
    };

    // Directed boundary edges with the interior on the left.
    struct GridPt {
        std::size_t i, j;
        bool operator<(const GridPt& o) const { return i < o.i || (i == o.i && j < o.j); }
        bool operator==(const GridPt& o) const = default;
    };
    std::multimap<GridPt, GridPt> edges;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const auto ii = static_cast<std::ptrdiff_t>(i);
            const auto jj = static_cast<std::ptrdiff_t>(j);
            if (!is_cov(ii, jj)) continue;
            if (!is_cov(ii, jj - 1)) edges.insert({{i, j}, {i + 1, j}});
            if (!is_cov(ii + 1, jj)) edges.insert({{i + 1, j}, {i + 1, j + 1}});
            if (!is_cov(ii, jj + 1)) edges.insert({{i + 1, j + 1}, {i, j + 1}});
            if (!is_cov(ii - 1, jj)) edges.insert({{i, j + 1}, {i, j}});
        }
    }

    if (edges.empty()) throw GenerationError("rectilinear_union: empty union");

    std::vector<GridPt> ring;
    GridPt start = edges.begin()->first;
    GridPt cur = start;
    const std::size_t total_edges = edges.size();
    std::size_t used = 0;
    do {
        auto range = edges.equal_range(cur);
        if (range.first == range.second) {
            throw GenerationError("rectilinear_union: union boundary is not a closed ring");
        }
        auto it = range.first;
        if (std::distance(range.first, range.second) > 1) {
            throw GenerationError("rectilinear_union: union touches itself at a corner");
        }
        ring.push_back(cur);
        cur = it->second;
        edges.erase(it);
        ++used;
        if (used > total_edges) {
            throw GenerationError("rectilinear_union: boundary trace did not terminate");
        }
    } while (!(cur == start));
    if (!edges.empty()) {
        throw GenerationError("rectilinear_union: union has holes or is disconnected");
    }

    Polygon poly;
    poly.reserve(ring.size());
    for (const GridPt& g : ring) poly.push_back({xs[g.i], ys[g.j]});

    // Merge collinear runs.
    Polygon merged;
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 prev = poly[(k + n - 1) % n];
        const Vec2 here = poly[k];
        const Vec2 next = poly[(k + 1) % n];
        if (orientation(prev, here, next) != 0) merged.push_back(here);
    }
    if (signed_area(merged) < 0.0) std::reverse(merged.begin(), merged.end());
    return merged;
}

}  // namespace planloc
