#pragma once

#include "rtint/vec3.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rtint {

// Recursive geometric bipartition of a point set (longest-axis median split)
// with bounding spheres; the row/column index hierarchy of an H-matrix.
class ClusterTree {
public:
    struct Node {
        int begin = 0, end = 0; // range into perm()
        Vec3 center;
        double radius = 0.0;
        int child0 = -1, child1 = -1;

        bool is_leaf() const { return child0 < 0; }
        int size() const { return end - begin; }
    };

    ClusterTree() = default;

    ClusterTree(const std::vector<Vec3>& points, int leaf_size) : leaf_size_(leaf_size) {
        if (points.empty()) throw std::invalid_argument("ClusterTree: no points");
        if (leaf_size < 1) throw std::invalid_argument("ClusterTree: leaf_size must be >= 1");
        points_ = points;
        perm_.resize(points.size());
        for (size_t i = 0; i < points.size(); ++i) perm_[i] = static_cast<int>(i);
        build(0, static_cast<int>(points.size()));
    }

    const std::vector<int>& perm() const { return perm_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_[0]; }
    const Node& node(int i) const { return nodes_[i]; }
    int leaf_size() const { return leaf_size_; }
    int num_points() const { return static_cast<int>(perm_.size()); }

    int depth() const {
        int d = 0;
        measure_depth(0, 1, d);
        return d;
    }

    // reconstruct from serialized parts (point coordinates are not needed
    // once the hierarchy is fixed)
    static ClusterTree from_parts(std::vector<int> perm, std::vector<Node> nodes,
                                  int leaf_size) {
        ClusterTree t;
        t.perm_ = std::move(perm);
        t.nodes_ = std::move(nodes);
        t.leaf_size_ = leaf_size;
        return t;
    }

private:
    int build(int begin, int end) {
        Node n;
        n.begin = begin;
        n.end = end;
        Vec3 lo = points_[perm_[begin]], hi = lo;
        for (int k = begin; k < end; ++k) {
            const Vec3& p = points_[perm_[k]];
            for (int d = 0; d < 3; ++d) {
                lo[d] = std::min(lo[d], p[d]);
                hi[d] = std::max(hi[d], p[d]);
            }
        }
        n.center = 0.5 * (lo + hi);
        double r2 = 0.0;
        for (int k = begin; k < end; ++k) r2 = std::max(r2, dist2(points_[perm_[k]], n.center));
        n.radius = std::sqrt(r2);

        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(n);
        if (end - begin > leaf_size_) {
            int axis = 0;
            Vec3 ext = hi - lo;
            if (ext.y > ext[axis]) axis = 1;
            if (ext.z > ext[axis]) axis = 2;
            const int mid = begin + (end - begin) / 2;
            std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                             [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
            const int c0 = build(begin, mid);
            const int c1 = build(mid, end);
            nodes_[self].child0 = c0;
            nodes_[self].child1 = c1;
        }
        return self;
    }

    void measure_depth(int i, int level, int& best) const {
        best = std::max(best, level);
        if (!nodes_[i].is_leaf()) {
            measure_depth(nodes_[i].child0, level + 1, best);
            measure_depth(nodes_[i].child1, level + 1, best);
        }
    }

    std::vector<Vec3> points_;
    std::vector<int> perm_;
    std::vector<Node> nodes_;
    int leaf_size_ = 64;
};

inline ClusterTree build_cluster_tree(const std::vector<Vec3>& points, int leaf_size) {
    return ClusterTree(points, leaf_size);
}

// max(R1, R2) < eta * |x1 - x2|; symmetric in its arguments.
inline bool is_admissible(const ClusterTree::Node& a, const ClusterTree::Node& b, double eta) {
    return std::max(a.radius, b.radius) < eta * dist(a.center, b.center);
}

} // namespace rtint
