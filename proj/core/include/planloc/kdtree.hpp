#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace planloc {

// Exact nearest-neighbour index over low-dimensional points. Axis cycles with
// tree depth; queries prune on the splitting-plane distance, so results equal
// a brute-force scan.
template <int Dim>
class KdTree {
public:
    using Point = std::array<double, Dim>;

    struct Result {
        std::size_t index;
        double sq_dist;
    };

    KdTree() = default;

    explicit KdTree(std::vector<Point> points) : pts_(std::move(points)) {
        if (pts_.empty()) return;
        std::vector<std::size_t> order(pts_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        nodes_.reserve(pts_.size());
        root_ = build(order, 0, pts_.size(), 0);
    }

    std::size_t size() const { return pts_.size(); }
    bool empty() const { return pts_.empty(); }
    const Point& point(std::size_t i) const { return pts_[i]; }

    Result nearest(const Point& q) const {
        if (pts_.empty()) throw std::logic_error("KdTree::nearest on empty tree");
        Result best{0, std::numeric_limits<double>::max()};
        search(root_, q, best);
        return best;
    }

private:
    struct Node {
        std::size_t point;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::int8_t axis = 0;
    };

    static double sq_distance(const Point& a, const Point& b) {
        double s = 0.0;
        for (int k = 0; k < Dim; ++k) {
            const double d = a[k] - b[k];
            s += d * d;
        }
        return s;
    }

    std::int32_t build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi,
                       int depth) {
        if (lo >= hi) return -1;
        const int axis = depth % Dim;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(lo),
                         order.begin() + static_cast<std::ptrdiff_t>(mid),
                         order.begin() + static_cast<std::ptrdiff_t>(hi),
                         [&](std::size_t a, std::size_t b) {
                             if (pts_[a][axis] != pts_[b][axis])
                                 return pts_[a][axis] < pts_[b][axis];
                             return a < b;  // total order keeps builds deterministic
                         });
        const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(Node{order[mid], -1, -1, static_cast<std::int8_t>(axis)});
        const std::int32_t left = build(order, lo, mid, depth + 1);
        const std::int32_t right = build(order, mid + 1, hi, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    void search(std::int32_t id, const Point& q, Result& best) const {
        if (id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        const Point& p = pts_[node.point];
        const double d = sq_distance(p, q);
        if (d < best.sq_dist || (d == best.sq_dist && node.point < best.index)) {
            best = Result{node.point, d};
        }
        const double delta = q[node.axis] - p[node.axis];
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        search(near, q, best);
        if (delta * delta <= best.sq_dist) search(far, q, best);
    }

    std::vector<Point> pts_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

using KdTree2 = KdTree<2>;
using KdTree3 = KdTree<3>;

}  // namespace planloc
