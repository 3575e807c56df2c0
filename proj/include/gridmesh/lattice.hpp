#pragma once

#include <array>
#include <vector>

#include "gridmesh/core.hpp"
#include "gridmesh/mesh.hpp"

namespace gridmesh {

// ---------------------------------------------------------------------------
// CubeLattice: axis-aligned cube grid with a canonical unique-edge indexing.
//
// Cube corners follow the classic marching-cubes convention: the 0-1-2-3 ring
// lies in the lower-y plane (x then z), corners 4-7 sit one cell up in y.
// Every lattice edge has one global id; its canonical endpoint order is the
// lexicographically smaller lattice vertex first, which is what lets a single
// per-edge prediction serve all incident cubes.
// ---------------------------------------------------------------------------

using EdgeId = std::int64_t;

struct LatticeCoord {
    int i = 0, j = 0, k = 0;
    bool operator==(const LatticeCoord&) const = default;
};

class CubeLattice {
  public:
    // corner index -> lattice offset (di, dj, dk)
    static constexpr int kCornerOffset[8][3] = {
        {0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
        {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1},
    };
    // local edge -> its two corners
    static constexpr int kEdgeCorner[12][2] = {
        {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
        {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
    };
    // local edge -> (offset of the lower lattice vertex, axis): axis 0=x,1=y,2=z
    static constexpr int kEdgeAnchor[12][4] = {
        {0, 0, 0, 0}, {1, 0, 0, 2}, {0, 0, 1, 0}, {0, 0, 0, 2},
        {0, 1, 0, 0}, {1, 1, 0, 2}, {0, 1, 1, 0}, {0, 1, 0, 2},
        {0, 0, 0, 1}, {1, 0, 0, 1}, {1, 0, 1, 1}, {0, 0, 1, 1},
    };
    // spanning tree used to propagate relative signs from the anchor corner 0:
    // (corner, parent corner, local edge), in derivation order
    static constexpr int kSignTree[7][3] = {
        {1, 0, 0}, {3, 0, 3}, {4, 0, 8}, {2, 1, 1}, {5, 1, 9}, {7, 3, 11}, {6, 2, 10},
    };

    CubeLattice(const Vec3& origin, double cell, std::array<int, 3> dims)
        : origin_(origin), cell_(cell), dims_(dims) {
        const std::int64_t nx = dims_[0], ny = dims_[1], nz = dims_[2];
        count_x_ = nx * (ny + 1) * (nz + 1);
        count_y_ = (nx + 1) * ny * (nz + 1);
        count_z_ = (nx + 1) * (ny + 1) * nz;
    }

    const Vec3& origin() const { return origin_; }
    double cell() const { return cell_; }
    const std::array<int, 3>& dims() const { return dims_; }

    std::int64_t cube_count() const {
        return std::int64_t(dims_[0]) * dims_[1] * dims_[2];
    }
    EdgeId edge_count() const { return count_x_ + count_y_ + count_z_; }

    Vec3 vertex_position(int i, int j, int k) const {
        return origin_ + cell_ * Vec3(i, j, k);
    }

    Vec3 corner_position(const LatticeCoord& cube, int corner) const {
        return vertex_position(cube.i + kCornerOffset[corner][0], cube.j + kCornerOffset[corner][1],
                               cube.k + kCornerOffset[corner][2]);
    }

    // Global id of the edge starting at lattice vertex (i,j,k) along +axis.
    EdgeId edge_id(int i, int j, int k, int axis) const {
        const std::int64_t nx = dims_[0], ny = dims_[1], nz = dims_[2];
        switch (axis) {
            case 0:
                return (std::int64_t(k) * (ny + 1) + j) * nx + i;
            case 1:
                return count_x_ + (std::int64_t(k) * ny + j) * (nx + 1) + i;
            default:
                return count_x_ + count_y_ + (std::int64_t(k) * (ny + 1) + j) * (nx + 1) + i;
        }
    }

    struct EdgeRef {
        int i, j, k, axis;
    };

    EdgeRef edge_from_id(EdgeId id) const {
        const std::int64_t nx = dims_[0], ny = dims_[1];
        if (id < count_x_) {
            int i = static_cast<int>(id % nx);
            std::int64_t rest = id / nx;
            return {i, static_cast<int>(rest % (ny + 1)), static_cast<int>(rest / (ny + 1)), 0};
        }
        id -= count_x_;
        if (id < count_y_) {
            int i = static_cast<int>(id % (nx + 1));
            std::int64_t rest = id / (nx + 1);
            return {i, static_cast<int>(rest % ny), static_cast<int>(rest / ny), 1};
        }
        id -= count_y_;
        int i = static_cast<int>(id % (nx + 1));
        std::int64_t rest = id / (nx + 1);
        return {i, static_cast<int>(rest % (ny + 1)), static_cast<int>(rest / (ny + 1)), 2};
    }

    // canonical endpoints: a is the lexicographically smaller lattice vertex
    std::pair<Vec3, Vec3> edge_endpoints(EdgeId id) const {
        EdgeRef e = edge_from_id(id);
        Vec3 a = vertex_position(e.i, e.j, e.k);
        Vec3 b = a;
        b[e.axis] += cell_;
        return {a, b};
    }

    EdgeId cube_edge_id(const LatticeCoord& cube, int local_edge) const {
        const int* anchor = kEdgeAnchor[local_edge];
        return edge_id(cube.i + anchor[0], cube.j + anchor[1], cube.k + anchor[2], anchor[3]);
    }

  private:
    Vec3 origin_;
    double cell_;
    std::array<int, 3> dims_;
    std::int64_t count_x_ = 0, count_y_ = 0, count_z_ = 0;
};

// ---------------------------------------------------------------------------
// Lattice construction: cell = longest bbox extent / resolution, expanded by
// at least two cells of padding on every side. The origin is offset by an
// extra half cell so axis-aligned surfaces (a disk in a coordinate plane, a
// box face at a bbox edge) cannot land exactly on a lattice plane, which
// would degenerate every crossing into an on-surface endpoint.
// ---------------------------------------------------------------------------

constexpr int kLatticePadding = 2;

inline CubeLattice enumerate_lattice(const Aabb& bbox, int resolution) {
    if (resolution < 2) throw UsageError("resolution must be at least 2");
    if (resolution > 1024) throw Error("lattice too large");
    if (!bbox.valid() || bbox.longest_extent() <= 0.0) throw DataError("degenerate bounding box");
    double cell = bbox.longest_extent() / resolution;
    std::array<int, 3> dims;
    for (int axis = 0; axis < 3; ++axis) {
        int n = static_cast<int>(std::ceil(bbox.extent()[axis] / cell - 1e-9));
        dims[axis] = n + 2 * kLatticePadding + 1;
    }
    Vec3 origin = bbox.lo - Vec3::Constant((kLatticePadding + 0.5) * cell);
    return CubeLattice(origin, cell, dims);
}

// ---------------------------------------------------------------------------
// Active cubes: cubes containing at least one input point, dilated by a
// Chebyshev radius. Output is sorted and unique.
// ---------------------------------------------------------------------------

inline std::vector<LatticeCoord> active_cubes(const CubeLattice& lattice, const PointCloud& cloud,
                                              int dilation = 3) {
    const auto& dims = lattice.dims();
    auto key = [&](int i, int j, int k) {
        return (std::int64_t(k) * dims[1] + j) * dims[0] + i;
    };
    std::vector<std::int64_t> keys;
    keys.reserve(cloud.points.size() * (2 * dilation + 1));
    for (const Vec3& p : cloud.points) {
        Vec3 rel = (p - lattice.origin()) / lattice.cell();
        int ci = static_cast<int>(std::floor(rel.x()));
        int cj = static_cast<int>(std::floor(rel.y()));
        int ck = static_cast<int>(std::floor(rel.z()));
        for (int dk = -dilation; dk <= dilation; ++dk)
            for (int dj = -dilation; dj <= dilation; ++dj)
                for (int di = -dilation; di <= dilation; ++di) {
                    int i = ci + di, j = cj + dj, k = ck + dk;
                    if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2])
                        continue;
                    keys.push_back(key(i, j, k));
                }
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    std::vector<LatticeCoord> cubes;
    cubes.reserve(keys.size());
    for (std::int64_t k : keys) {
        LatticeCoord c;
        c.i = static_cast<int>(k % dims[0]);
        c.j = static_cast<int>((k / dims[0]) % dims[1]);
        c.k = static_cast<int>(k / (std::int64_t(dims[0]) * dims[1]));
        cubes.push_back(c);
    }
    return cubes;
}

}  // namespace gridmesh
