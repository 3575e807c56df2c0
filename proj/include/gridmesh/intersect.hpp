#pragma once

#include <optional>
#include <vector>

#include "gridmesh/core.hpp"
#include "gridmesh/mesh.hpp"

namespace gridmesh {

// merge tolerance for near-duplicate hits on shared triangle edges, in alpha units
constexpr double kHitMergeTol = 1e-9;

struct SegmentHit {
    double alpha;  // position along the segment, in [0, 1]
    int triangle;
};

namespace detail {

// sign of det[b-a, c-a, d-a]
inline double orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return (b - a).cross(c - a).dot(d - a);
}

// Segment ab against triangle (v0,v1,v2). Boundary contacts (edge/vertex)
// report a hit from every incident triangle; callers merge duplicates by
// alpha, which restores the once-per-crossing count.
inline std::optional<double> segment_triangle(const Vec3& a, const Vec3& b, const Vec3& v0,
                                              const Vec3& v1, const Vec3& v2) {
    double da = orient3d(v0, v1, v2, a);
    double db = orient3d(v0, v1, v2, b);
    if (da == 0.0 && db == 0.0) return std::nullopt;  // coplanar segment
    if ((da > 0.0 && db > 0.0) || (da < 0.0 && db < 0.0)) return std::nullopt;
    double s0 = orient3d(a, b, v0, v1);
    double s1 = orient3d(a, b, v1, v2);
    double s2 = orient3d(a, b, v2, v0);
    bool all_nonneg = s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0;
    bool all_nonpos = s0 <= 0.0 && s1 <= 0.0 && s2 <= 0.0;
    if (!all_nonneg && !all_nonpos) return std::nullopt;
    double denom = da - db;
    if (denom == 0.0) return std::nullopt;
    double alpha = da / denom;
    if (alpha < 0.0) alpha = 0.0;
    if (alpha > 1.0) alpha = 1.0;
    return alpha;
}

// Closest point on triangle to p (Ericson, Real-Time Collision Detection)
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

inline bool segment_overlaps_box(const Vec3& a, const Vec3& b, const Aabb& box) {
    double tmin = 0.0, tmax = 1.0;
    for (int axis = 0; axis < 3; ++axis) {
        double d = b[axis] - a[axis];
        if (std::abs(d) < 1e-300) {
            if (a[axis] < box.lo[axis] || a[axis] > box.hi[axis]) return false;
            continue;
        }
        double inv = 1.0 / d;
        double t0 = (box.lo[axis] - a[axis]) * inv;
        double t1 = (box.hi[axis] - a[axis]) * inv;
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmax < tmin) return false;
    }
    return true;
}

inline void merge_hits(std::vector<SegmentHit>& hits) {
    std::sort(hits.begin(), hits.end(), [](const SegmentHit& x, const SegmentHit& y) {
        return x.alpha < y.alpha || (x.alpha == y.alpha && x.triangle < y.triangle);
    });
    std::vector<SegmentHit> merged;
    for (const SegmentHit& h : hits) {
        if (!merged.empty() && h.alpha - merged.back().alpha < kHitMergeTol) continue;
        merged.push_back(h);
    }
    hits = std::move(merged);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// TriangleBvh: segment intersection and closest-point queries over a mesh.
// Degenerate triangles never contribute hits or closest points.
// ---------------------------------------------------------------------------

class TriangleBvh {
  public:
    explicit TriangleBvh(const TriangleMesh& mesh) : mesh_(&mesh) {
        tris_.reserve(mesh.triangle_count());
        for (size_t t = 0; t < mesh.triangle_count(); ++t)
            if (!mesh.tri_degenerate[t]) tris_.push_back(static_cast<int>(t));
        if (!tris_.empty()) root_ = build(0, static_cast<int>(tris_.size()));
    }

    // all surface crossings along ab, ascending alpha, duplicates merged
    std::vector<SegmentHit> segment_hits(const Vec3& a, const Vec3& b) const {
        std::vector<SegmentHit> hits;
        if (root_ >= 0) collect_hits(root_, a, b, hits);
        detail::merge_hits(hits);
        return hits;
    }

    struct ClosestPoint {
        double distance;
        Vec3 point;
        int triangle;
    };

    ClosestPoint closest_point(const Vec3& q) const {
        if (root_ < 0) throw DataError("no samplable area");
        ClosestPoint best{std::numeric_limits<double>::max(), Vec3::Zero(), -1};
        double best_d2 = std::numeric_limits<double>::max();
        search_closest(root_, q, best, best_d2);
        best.distance = std::sqrt(best_d2);
        return best;
    }

  private:
    static constexpr int kLeafSize = 4;

    struct Node {
        Aabb box;
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };

    int build(int begin, int end) {
        Node node;
        for (int i = begin; i < end; ++i) {
            int t = tris_[i];
            for (int c = 0; c < 3; ++c) node.box.expand(mesh_->tri_vertex(t, c));
        }
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
        std::nth_element(tris_.begin() + begin, tris_.begin() + mid, tris_.begin() + end,
                         [&](int ta, int tb) {
                             double ca = mesh_->tri_centroid(ta)[axis];
                             double cb = mesh_->tri_centroid(tb)[axis];
                             return ca < cb || (ca == cb && ta < tb);
                         });
        int l = build(begin, mid);
        int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void collect_hits(int node_id, const Vec3& a, const Vec3& b, std::vector<SegmentHit>& hits) const {
        const Node& node = nodes_[node_id];
        if (!detail::segment_overlaps_box(a, b, node.box)) return;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                int t = tris_[i];
                auto alpha = detail::segment_triangle(a, b, mesh_->tri_vertex(t, 0),
                                                      mesh_->tri_vertex(t, 1), mesh_->tri_vertex(t, 2));
                if (alpha) hits.push_back({*alpha, t});
            }
            return;
        }
        collect_hits(node.left, a, b, hits);
        collect_hits(node.right, a, b, hits);
    }

    void search_closest(int node_id, const Vec3& q, ClosestPoint& best, double& best_d2) const {
        const Node& node = nodes_[node_id];
        if (node.box.sq_distance(q) >= best_d2) return;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                int t = tris_[i];
                Vec3 cp = detail::closest_point_on_triangle(q, mesh_->tri_vertex(t, 0),
                                                            mesh_->tri_vertex(t, 1),
                                                            mesh_->tri_vertex(t, 2));
                double d2 = (cp - q).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best.point = cp;
                    best.triangle = t;
                }
            }
            return;
        }
        double dl = nodes_[node.left].box.sq_distance(q);
        double dr = nodes_[node.right].box.sq_distance(q);
        int first = node.left, second = node.right;
        if (dr < dl) std::swap(first, second);
        search_closest(first, q, best, best_d2);
        search_closest(second, q, best, best_d2);
    }

    const TriangleMesh* mesh_;
    std::vector<int> tris_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// All intersections of segment ab with the mesh surface: sorted (alpha,
// triangle) pairs, near-duplicates merged so a crossing through a shared
// triangle edge counts once.
inline std::vector<SegmentHit> segment_mesh_intersections(const TriangleMesh& mesh, const Vec3& a,
                                                          const Vec3& b) {
    if ((a - b).squaredNorm() == 0.0) throw Error("degenerate segment");
    std::vector<SegmentHit> hits;
    for (size_t t = 0; t < mesh.triangle_count(); ++t) {
        if (mesh.tri_degenerate[t]) continue;
        auto alpha = detail::segment_triangle(a, b, mesh.tri_vertex(t, 0), mesh.tri_vertex(t, 1),
                                              mesh.tri_vertex(t, 2));
        if (alpha) hits.push_back({*alpha, static_cast<int>(t)});
    }
    detail::merge_hits(hits);
    return hits;
}

}  // namespace gridmesh
