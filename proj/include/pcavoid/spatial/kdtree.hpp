#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "pcavoid/core/types.hpp"

namespace pcavoid {

struct Neighbor {
    Point3 point;
    double distance = 0.0;
    std::size_t index = 0;  // insertion index in the build input
};

/// Static 3-d tree, rebuilt from scratch on every build. Queries are exact:
/// distances use squared_distance() and pruning uses per-node bounding boxes,
/// whose rounded lower bound never exceeds the rounded point distance. Ties are
/// resolved toward the lowest insertion index.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::vector<Point3> points) { build(std::move(points)); }

    void build(std::vector<Point3> points) {
        points_ = std::move(points);
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        nodes_.clear();
        if (!points_.empty()) {
            nodes_.reserve(2 * points_.size() / kLeafSize + 2);
            build_node(0, static_cast<std::uint32_t>(points_.size()));
        }
        // Leaf scans read points contiguously instead of through order_.
        packed_.resize(points_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) {
            packed_[i] = points_[order_[i]];
        }
    }

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    std::span<const Point3> points() const { return points_; }

    /// Closest point with distance <= radius, or nothing.
    std::optional<Neighbor> nearest_within(const Point3& q, double radius) const {
        if (nodes_.empty() || !(radius >= 0.0)) {
            return std::nullopt;
        }
        Best best{radius * radius, kNone};
        search_nearest(0, q, best);
        if (best.index == kNone) {
            return std::nullopt;
        }
        return Neighbor{points_[best.index], std::sqrt(best.d2), best.index};
    }

    std::optional<Neighbor> nearest(const Point3& q) const {
        return nearest_within(q, std::numeric_limits<double>::max());
    }

    /// True if any point lies within `radius` of q. Early exit; cheaper than nearest_within.
    bool any_within(const Point3& q, double radius) const {
        if (nodes_.empty()) {
            return false;
        }
        return search_any(0, q, radius * radius);
    }

    /// Insertion indices of every point within `radius`, ascending.
    std::vector<std::size_t> radius_search(const Point3& q, double radius) const {
        std::vector<std::size_t> out;
        if (!nodes_.empty()) {
            search_radius(0, q, radius * radius, out);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static constexpr std::uint32_t kLeafSize = 8;
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    static constexpr std::uint32_t kNoChild = std::numeric_limits<std::uint32_t>::max();

    struct Node {
        Point3 lo;
        Point3 hi;
        std::uint32_t begin;
        std::uint32_t end;
        std::uint32_t left = kNoChild;
        std::uint32_t right = kNoChild;
    };

    struct Best {
        double d2;
        std::size_t index;
    };

    std::uint32_t build_node(std::uint32_t begin, std::uint32_t end) {
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back({});
        Point3 lo = points_[order_[begin]];
        Point3 hi = lo;
        for (std::uint32_t i = begin + 1; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        nodes_[id].lo = lo;
        nodes_[id].hi = hi;
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        if (end - begin <= kLeafSize) {
            return id;
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
        const std::uint32_t left = build_node(begin, mid);
        const std::uint32_t right = build_node(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    static double box_distance2(const Node& n, const Point3& q) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) {
            double d = 0.0;
            if (q[k] < n.lo[k]) {
                d = n.lo[k] - q[k];
            } else if (q[k] > n.hi[k]) {
                d = q[k] - n.hi[k];
            }
            d2 += d * d;
        }
        return d2;
    }

    void search_nearest(std::uint32_t id, const Point3& q, Best& best) const {
        const Node& n = nodes_[id];
        if (n.left == kNoChild) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                const double d2 = squared_distance(packed_[i], q);
                if (d2 < best.d2 || (d2 == best.d2 && order_[i] < best.index)) {
                    best = {d2, order_[i]};
                }
            }
            return;
        }
        const double dl = box_distance2(nodes_[n.left], q);
        const double dr = box_distance2(nodes_[n.right], q);
        const std::uint32_t first = dl <= dr ? n.left : n.right;
        const std::uint32_t second = dl <= dr ? n.right : n.left;
        const double d_first = std::min(dl, dr);
        const double d_second = std::max(dl, dr);
        if (d_first <= best.d2) {
            search_nearest(first, q, best);
        }
        if (d_second <= best.d2) {
            search_nearest(second, q, best);
        }
    }

    bool search_any(std::uint32_t id, const Point3& q, double r2) const {
        const Node& n = nodes_[id];
        if (box_distance2(n, q) > r2) {
            return false;
        }
        if (n.left == kNoChild) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                if (squared_distance(packed_[i], q) <= r2) {
                    return true;
                }
            }
            return false;
        }
        return search_any(n.left, q, r2) || search_any(n.right, q, r2);
    }

    void search_radius(std::uint32_t id, const Point3& q, double r2, std::vector<std::size_t>& out) const {
        const Node& n = nodes_[id];
        if (box_distance2(n, q) > r2) {
            return;
        }
        if (n.left == kNoChild) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                if (squared_distance(packed_[i], q) <= r2) {
                    out.push_back(order_[i]);
                }
            }
            return;
        }
        search_radius(n.left, q, r2, out);
        search_radius(n.right, q, r2, out);
    }

    std::vector<Point3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Point3> packed_;  // points_ permuted into order_
    std::vector<Node> nodes_;
};

}  // namespace pcavoid
