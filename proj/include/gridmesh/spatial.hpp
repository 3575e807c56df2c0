#pragma once

#include <numeric>
#include <vector>

#include "gridmesh/core.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// PointKdTree: exact nearest-neighbor / kNN queries over a fixed point set.
// Results are identical to a brute-force scan; ties are broken by the lowest
// point index. Immutable after construction, safe for concurrent queries.
// ---------------------------------------------------------------------------

class PointKdTree {
  public:
    explicit PointKdTree(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) throw DataError("empty point set");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        root_ = build(0, static_cast<int>(points_.size()));
    }

    size_t size() const { return points_.size(); }
    const Vec3& point(int i) const { return points_[i]; }
    const std::vector<Vec3>& points() const { return points_; }

    // (index, Euclidean distance) of the closest point
    std::pair<int, double> nearest(const Vec3& q) const {
        std::vector<int> idx;
        std::vector<double> dist;
        knn(q, 1, idx, dist);
        return {idx[0], dist[0]};
    }

    // k nearest points, ascending by (distance, index)
    void knn(const Vec3& q, int k, std::vector<int>& idx, std::vector<double>& dist) const {
        k = std::min<int>(k, static_cast<int>(points_.size()));
        std::vector<Entry> heap;
        heap.reserve(k + 1);
        search(root_, q, k, heap);
        idx.resize(k);
        dist.resize(k);
        std::sort(heap.begin(), heap.end());
        for (int i = 0; i < k; ++i) {
            idx[i] = heap[i].second;
            dist[i] = std::sqrt(heap[i].first);
        }
    }

  private:
    static constexpr int kLeafSize = 8;

    struct Node {
        Aabb box;
        int left = -1, right = -1;  // children, or -1 for leaf
        int begin = 0, end = 0;     // range in order_ (leaf only)
    };

    int build(int begin, int end) {
        Node node;
        for (int i = begin; i < end; ++i) node.box.expand(points_[order_[i]]);
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) {
            nodes_[id].begin = begin;
            nodes_[id].end = end;
            return id;
        }
        int axis;
        nodes_[id].box.extent().maxCoeff(&axis);
        int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) {
                             double pa = points_[a][axis], pb = points_[b][axis];
                             return pa < pb || (pa == pb && a < b);
                         });
        int l = build(begin, mid);
        int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    using Entry = std::pair<double, int>;  // (squared distance, index)

    void search(int node_id, const Vec3& q, int k, std::vector<Entry>& heap) const {
        const Node& node = nodes_[node_id];
        if (static_cast<int>(heap.size()) == k && node.box.sq_distance(q) > heap.front().first)
            return;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                int p = order_[i];
                Entry e{(points_[p] - q).squaredNorm(), p};
                if (static_cast<int>(heap.size()) < k) {
                    heap.push_back(e);
                    std::push_heap(heap.begin(), heap.end());
                } else if (e < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = e;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            return;
        }
        double dl = nodes_[node.left].box.sq_distance(q);
        double dr = nodes_[node.right].box.sq_distance(q);
        int first = node.left, second = node.right;
        if (dr < dl) std::swap(first, second);
        search(first, q, k, heap);
        search(second, q, k, heap);
    }

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

// Brute-force reference used in tests and for small inputs.
inline std::pair<int, double> brute_force_nearest(const std::vector<Vec3>& pts, const Vec3& q) {
    int best = 0;
    double best_d2 = (pts[0] - q).squaredNorm();
    for (size_t i = 1; i < pts.size(); ++i) {
        double d2 = (pts[i] - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(i);
        }
    }
    return {best, std::sqrt(best_d2)};
}

}  // namespace gridmesh
